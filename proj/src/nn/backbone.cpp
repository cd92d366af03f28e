#include "unipose/nn/backbone.hpp"

namespace unipose::nn {

void BackboneConfig::validate() const {
  const std::size_t n = stage_channels.size();
  if (n == 0 || blocks_per_stage.size() != n || stage_strides.size() != n ||
      stage_dilations.size() != n) {
    throw TensorError("BackboneConfig: stage lists must be non-empty and of equal length");
  }
  if (in_channels < 1 || stem_channels < 1) throw TensorError("BackboneConfig: bad stem");
  for (std::size_t i = 0; i < n; ++i) {
    if (stage_channels[i] < 1 || blocks_per_stage[i] < 1 || stage_strides[i] < 1 ||
        stage_dilations[i] < 1) {
      throw TensorError("BackboneConfig: stage " + std::to_string(i) + " has a non-positive entry");
    }
  }
  if (output_stride != 8) {
    throw TensorError("BackboneConfig: output_stride must be 8, got " +
                      std::to_string(output_stride));
  }
  int stride = 2;
  for (int s : stage_strides) stride *= s;
  if (stride != 8) {
    throw TensorError("BackboneConfig: stem and stage strides compose to " +
                      std::to_string(stride) + ", expected 8");
  }
  low_level_stage();
}

int BackboneConfig::low_level_stage() const {
  int stride = 2;
  for (std::size_t i = 0; i < stage_strides.size(); ++i) {
    stride *= stage_strides[i];
    if (stride == 4) return static_cast<int>(i);
    if (stride > 4) break;
  }
  throw TensorError("BackboneConfig: no stage sits at stride 4 for the low-level tap");
}

int BackboneConfig::low_level_channels() const { return stage_channels[low_level_stage()]; }

template <typename T>
ResidualBlock<T>::ResidualBlock(const ResidualBlockSpec& spec, Initializer& init) : spec_(spec) {
  conv1_ = Conv2d<T>({spec.in_channels, spec.out_channels, 3, spec.stride, -1, spec.dilation, false},
                     init);
  norm1_ = ChannelAffine<T>(spec.out_channels, 1.0, init);
  conv2_ = Conv2d<T>({spec.out_channels, spec.out_channels, 3, 1, -1, spec.dilation, false}, init);
  // The residual branch starts switched off so that deep stacks begin as
  // near-identity maps.
  norm2_ = ChannelAffine<T>(spec.out_channels, 0.0, init);
  has_projection_ = spec.stride != 1 || spec.in_channels != spec.out_channels;
  if (has_projection_) {
    projection_ = Conv2d<T>({spec.in_channels, spec.out_channels, 1, spec.stride, 0, 1, false}, init);
    projection_norm_ = ChannelAffine<T>(spec.out_channels, 1.0, init);
  }
}

template <typename T>
Tensor<T> ResidualBlock<T>::operator()(const Tensor<T>& input) const {
  if (input.shape().c != spec_.in_channels) {
    throw TensorError("ResidualBlock: expected " + std::to_string(spec_.in_channels) +
                      " input channels, got " + std::to_string(input.shape().c));
  }
  auto f = ops::relu(norm1_(conv1_(input)));
  f = norm2_(conv2_(f));
  auto shortcut = has_projection_ ? projection_norm_(projection_(input)) : input;
  return ops::relu(ops::add(f, shortcut));
}

template <typename T>
void ResidualBlock<T>::collect(const std::string& prefix, ParamList<T>& out) const {
  conv1_.collect(prefix + ".conv1", out);
  norm1_.collect(prefix + ".norm1", out);
  conv2_.collect(prefix + ".conv2", out);
  norm2_.collect(prefix + ".norm2", out);
  if (has_projection_) {
    projection_.collect(prefix + ".proj", out);
    projection_norm_.collect(prefix + ".proj_norm", out);
  }
}

template <typename T>
Backbone<T>::Backbone(const BackboneConfig& config, Initializer& init) : config_(config) {
  config.validate();
  stem_ = Conv2d<T>({config.in_channels, config.stem_channels, 3, 1, -1, 1, false}, init);
  stem_norm_ = ChannelAffine<T>(config.stem_channels, 1.0, init);
  int channels = config.stem_channels;
  for (std::size_t s = 0; s < config.stage_channels.size(); ++s) {
    std::vector<ResidualBlock<T>> blocks;
    for (int b = 0; b < config.blocks_per_stage[s]; ++b) {
      ResidualBlockSpec spec{channels, config.stage_channels[s], b == 0 ? config.stage_strides[s] : 1,
                             config.stage_dilations[s]};
      blocks.emplace_back(spec, init);
      channels = config.stage_channels[s];
    }
    stages_.push_back(std::move(blocks));
  }
}

template <typename T>
BackboneFeatures<T> Backbone<T>::operator()(const Tensor<T>& image) const {
  const Shape& s = image.shape();
  if (s.c != config_.in_channels) {
    throw TensorError("Backbone: expected " + std::to_string(config_.in_channels) +
                      " image channels, got " + std::to_string(s.c));
  }
  if (s.h % 8 != 0 || s.w % 8 != 0 || s.h == 0 || s.w == 0) {
    const int ph = (s.h + 7) / 8 * 8, pw = (s.w + 7) / 8 * 8;
    throw TensorError("Backbone: input " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                      " is not divisible by 8; pad to " + std::to_string(std::max(ph, 8)) + "x" +
                      std::to_string(std::max(pw, 8)));
  }
  const int tap = config_.low_level_stage();
  BackboneFeatures<T> out;
  auto x = ops::max_pool2d(ops::relu(stem_norm_(stem_(image))), 2, 2);
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    for (const auto& block : stages_[i]) x = block(x);
    if (static_cast<int>(i) == tap) out.low_level = x;
  }
  out.deep = x;
  return out;
}

template <typename T>
void Backbone<T>::collect(const std::string& prefix, ParamList<T>& out) const {
  stem_.collect(prefix + ".stem", out);
  stem_norm_.collect(prefix + ".stem_norm", out);
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    for (std::size_t b = 0; b < stages_[s].size(); ++b) {
      stages_[s][b].collect(prefix + ".stage" + std::to_string(s + 1) + "." + std::to_string(b), out);
    }
  }
}

template class ResidualBlock<float>;
template class ResidualBlock<double>;
template class Backbone<float>;
template class Backbone<double>;

}  // namespace unipose::nn
