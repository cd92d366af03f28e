#include "unipose/arch/wasp.hpp"

namespace unipose::arch {

void WaspConfig::validate(bool strict) const {
  if (in_channels < 1 || branch_channels < 1 || out_channels < 1) {
    throw SpecError("WaspConfig: channel counts must be positive");
  }
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (rates[i] < 1) throw SpecError("WaspConfig: rates must be >= 1");
    if (strict && i > 0 && rates[i] <= rates[i - 1]) {
      throw SpecError("WaspConfig: rates must be strictly increasing");
    }
  }
}

namespace {

nn::ConvSpec atrous_conv(int in, int out, int rate) { return {in, out, 3, 1, rate, rate, true}; }
nn::ConvSpec pointwise(int in, int out) { return {in, out, 1, 1, 0, 1, true}; }

ModuleSpec build_spec(const WaspConfig& c, bool waterfall) {
  ModuleSpec spec;
  const int input = spec.add_input("input");
  std::vector<int> branches;
  int prev = input;
  for (int i = 0; i < 4; ++i) {
    const int from = waterfall ? prev : input;
    const int in_ch = (waterfall && i > 0) ? c.branch_channels : c.in_channels;
    const std::string id = std::to_string(i + 1);
    prev = spec.add_conv("atrous" + id, atrous_conv(in_ch, c.branch_channels, c.rates[i]), from);
    branches.push_back(
        spec.add_conv("proj" + id, pointwise(c.branch_channels, c.branch_channels), prev));
  }
  const int pooled = spec.add_global_pool("pool", input);
  const int pool_proj = spec.add_conv("pool_proj", pointwise(c.in_channels, c.branch_channels), pooled);
  branches.push_back(spec.add_broadcast("pool_broadcast", pool_proj));
  const int cat = spec.add_concat("concat", branches);
  spec.add_conv("fuse", pointwise(5 * c.branch_channels, c.out_channels), cat);
  return spec;
}

}  // namespace

ModuleSpec wasp_spec(const WaspConfig& config) {
  config.validate(true);
  return build_spec(config, true);
}

ModuleSpec aspp_spec(const WaspConfig& config) {
  config.validate(false);
  return build_spec(config, false);
}

template <typename T>
AtrousPooling<T>::AtrousPooling(const WaspConfig& config, Topology topology, nn::Initializer& init)
    : config_(config), topology_(topology) {
  config.validate(topology == Topology::kWaterfall);
  const bool waterfall = topology == Topology::kWaterfall;
  for (int i = 0; i < 4; ++i) {
    const int in_ch = (waterfall && i > 0) ? config.branch_channels : config.in_channels;
    atrous_[i] = nn::Conv2d<T>(atrous_conv(in_ch, config.branch_channels, config.rates[i]), init);
    projection_[i] = nn::Conv2d<T>(pointwise(config.branch_channels, config.branch_channels), init);
  }
  pool_projection_ = nn::Conv2d<T>(pointwise(config.in_channels, config.branch_channels), init);
  fuse_ = nn::Conv2d<T>(pointwise(5 * config.branch_channels, config.out_channels), init);
}

template <typename T>
std::vector<Tensor<T>> AtrousPooling<T>::branches(const Tensor<T>& input) const {
  if (input.shape().c != config_.in_channels) {
    throw TensorError("atrous pooling: expected " + std::to_string(config_.in_channels) +
                      " input channels, got " + std::to_string(input.shape().c));
  }
  std::vector<Tensor<T>> out;
  Tensor<T> prev = input;
  for (int i = 0; i < 4; ++i) {
    const Tensor<T>& from = topology_ == Topology::kWaterfall ? prev : input;
    prev = ops::relu(atrous_[i](from));
    out.push_back(ops::relu(projection_[i](prev)));
  }
  auto pooled = ops::relu(pool_projection_(ops::global_avg_pool(input)));
  out.push_back(ops::broadcast_spatial(pooled, input.shape().h, input.shape().w));
  return out;
}

template <typename T>
Tensor<T> AtrousPooling<T>::operator()(const Tensor<T>& input) const {
  return fuse_(ops::concat_channels(branches(input)));
}

template <typename T>
void AtrousPooling<T>::collect(const std::string& prefix, nn::ParamList<T>& out) const {
  for (int i = 0; i < 4; ++i) {
    atrous_[i].collect(prefix + ".atrous" + std::to_string(i + 1), out);
    projection_[i].collect(prefix + ".proj" + std::to_string(i + 1), out);
  }
  pool_projection_.collect(prefix + ".pool_proj", out);
  fuse_.collect(prefix + ".fuse", out);
}

template <typename T>
ModuleSpec AtrousPooling<T>::spec() const {
  return build_spec(config_, topology_ == Topology::kWaterfall);
}

template class AtrousPooling<float>;
template class AtrousPooling<double>;

}  // namespace unipose::arch
