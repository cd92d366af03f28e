#include "unipose/model/unipose.hpp"

namespace unipose::model {

template <typename T>
Decoder<T>::Decoder(int context_channels, int low_level_channels, int out_channels,
                    const DecoderConfig& config, nn::Initializer& init)
    : context_channels_(context_channels), low_level_channels_(low_level_channels), config_(config) {
  const int c = config.channels;
  conv1_ = nn::Conv2d<T>({context_channels + low_level_channels, c, 3, 1, 1, 1, true}, init);
  conv2_ = nn::Conv2d<T>({c, c, 3, 1, 1, 1, true}, init);
  if (config.mid_scale > 1) mid_ = nn::Conv2d<T>({c, c, 3, 1, 1, 1, true}, init);
  int last = c;
  if (config.refine_channels > 0) {
    const int k = config.refine_kernel;
    refine_ = nn::Conv2d<T>({c, config.refine_channels, k, 1, k / 2, 1, true}, init);
    last = config.refine_channels;
  }
  out_ = nn::Conv2d<T>({last, out_channels, 1, 1, 0, 1, true}, init);
  // Heatmap head starts near zero so early steps are not spent undoing a
  // unit-scale random output.
  for (auto& w : out_.weight().mutable_data()) w *= T(0.01);
}

template <typename T>
Tensor<T> Decoder<T>::operator()(const Tensor<T>& context, const Tensor<T>& low_level, int out_h,
                                 int out_w, bool training, std::uint64_t seed) const {
  if (context.shape().c != context_channels_ || low_level.shape().c != low_level_channels_) {
    throw TensorError("Decoder: expected " + std::to_string(context_channels_) + " + " +
                      std::to_string(low_level_channels_) + " channels, got " +
                      std::to_string(context.shape().c) + " + " +
                      std::to_string(low_level.shape().c));
  }
  auto pooled = ops::max_pool2d(low_level, 2, 2);
  const Shape& a = context.shape();
  const Shape& b = pooled.shape();
  if (a.n != b.n || a.h != b.h || a.w != b.w) {
    throw TensorError("Decoder: pooled low-level features " + b.str() +
                      " do not match module features " + a.str());
  }
  auto x = ops::concat_channels<T>({context, pooled});
  x = nn::dropout(ops::relu(conv1_(x)), config_.dropout, seed * 2 + 1, training);
  x = nn::dropout(ops::relu(conv2_(x)), config_.dropout, seed * 2 + 2, training);
  if (config_.mid_scale > 1) {
    x = ops::bilinear_resize(x, a.h * config_.mid_scale, a.w * config_.mid_scale);
    x = ops::relu(mid_(x));
  }
  x = ops::bilinear_resize(x, out_h, out_w);
  if (config_.refine_channels > 0) x = ops::relu(refine_(x));
  return out_(x);
}

template <typename T>
void Decoder<T>::collect(const std::string& prefix, nn::ParamList<T>& out) const {
  conv1_.collect(prefix + ".conv1", out);
  conv2_.collect(prefix + ".conv2", out);
  if (config_.mid_scale > 1) mid_.collect(prefix + ".mid", out);
  if (config_.refine_channels > 0) refine_.collect(prefix + ".refine", out);
  out_.collect(prefix + ".out", out);
}

template <typename T>
LstmHead<T>::LstmHead(int heatmap_channels, int hidden_width, nn::Initializer& init)
    : cell_(heatmap_channels, heatmap_channels, init),
      post1_({heatmap_channels, hidden_width, 3, 1, 1, 1, true}, init),
      post2_({hidden_width, heatmap_channels, 3, 1, 1, 1, true}, init) {}

template <typename T>
nn::ConvLSTMState<T> LstmHead<T>::zero_state(const Shape& maps) const {
  return cell_.zero_state(maps.n, maps.h, maps.w);
}

template <typename T>
nn::ConvLSTMState<T> LstmHead<T>::step(const Tensor<T>& maps,
                                       const nn::ConvLSTMState<T>& state) const {
  return cell_.step(maps, state);
}

template <typename T>
Tensor<T> LstmHead<T>::readout(const Tensor<T>& hidden) const {
  return post2_(ops::relu(post1_(hidden)));
}

template <typename T>
void LstmHead<T>::collect(const std::string& prefix, nn::ParamList<T>& out) const {
  cell_.collect(prefix + ".cell", out);
  post1_.collect(prefix + ".post1", out);
  post2_.collect(prefix + ".post2", out);
}

template <typename T>
UniPoseModel<T>::UniPoseModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config.validate();
  nn::Initializer init(seed);
  backbone_ = nn::Backbone<T>(config.backbone, init);
  wasp_ = arch::Wasp<T>(config.wasp, init);
  decoder_ = Decoder<T>(config.wasp.out_channels, config.backbone.low_level_channels(),
                        config.heatmap_channels(), config.decoder, init);
  if (config.lstm) lstm_ = LstmHead<T>(config.heatmap_channels(), config.post_lstm_channels, init);
}

template <typename T>
Tensor<T> UniPoseModel<T>::forward(const Tensor<T>& image, bool training, std::uint64_t seed) const {
  auto features = backbone_(image);
  ++counters_->backbone;
  auto context = wasp_(features.deep);
  ++counters_->wasp;
  auto maps = decoder_(context, features.low_level, image.shape().h, image.shape().w, training, seed);
  ++counters_->decoder;
  return maps;
}

template <typename T>
std::vector<Tensor<T>> UniPoseModel<T>::lstm_unroll(const std::vector<Tensor<T>>& decoder_maps,
                                                   bool all_steps) const {
  if (!config_.lstm) throw TensorError("lstm_unroll: model was built without the LSTM head");
  if (decoder_maps.empty()) throw TensorError("lstm_unroll: empty sequence");
  std::vector<Tensor<T>> out;
  auto state = lstm_.zero_state(decoder_maps.front().shape());
  for (std::size_t t = 0; t < decoder_maps.size(); ++t) {
    state = lstm_.step(decoder_maps[t], state);
    ++counters_->lstm_steps;
    if (all_steps || t + 1 == decoder_maps.size()) out.push_back(lstm_.readout(state.hidden));
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> UniPoseModel<T>::forward_sequence(const std::vector<Tensor<T>>& frames,
                                                         int window) const {
  if (frames.empty()) throw TensorError("forward_sequence: empty sequence");
  for (const auto& f : frames) {
    if (!(f.shape() == frames.front().shape())) {
      throw TensorError("forward_sequence: frame sizes differ");
    }
  }
  if (window <= 0) window = config_.lstm_frames;
  std::vector<Tensor<T>> decoded;
  for (const auto& f : frames) decoded.push_back(forward(f));
  std::vector<Tensor<T>> out;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const std::size_t begin = t + 1 >= static_cast<std::size_t>(window) ? t + 1 - window : 0;
    std::vector<Tensor<T>> span(decoded.begin() + begin, decoded.begin() + t + 1);
    out.push_back(lstm_unroll(span, false).back());
  }
  return out;
}

template <typename T>
nn::ParamList<T> UniPoseModel<T>::base_parameters() const {
  nn::ParamList<T> out;
  backbone_.collect("backbone", out);
  wasp_.collect("wasp", out);
  decoder_.collect("decoder", out);
  return out;
}

template <typename T>
nn::ParamList<T> UniPoseModel<T>::lstm_parameters() const {
  nn::ParamList<T> out;
  if (config_.lstm) lstm_.collect("lstm", out);
  return out;
}

template <typename T>
nn::ParamList<T> UniPoseModel<T>::parameters() const {
  auto out = base_parameters();
  for (auto& p : lstm_parameters()) out.push_back(std::move(p));
  return out;
}

template <typename T>
CallCounts UniPoseModel<T>::counts() const {
  return {counters_->backbone.load(), counters_->wasp.load(), counters_->decoder.load(),
          counters_->lstm_steps.load()};
}

template <typename T>
void UniPoseModel<T>::reset_counts() const {
  counters_->backbone = 0;
  counters_->wasp = 0;
  counters_->decoder = 0;
  counters_->lstm_steps = 0;
}

template class Decoder<float>;
template class Decoder<double>;
template class LstmHead<float>;
template class LstmHead<double>;
template class UniPoseModel<float>;
template class UniPoseModel<double>;

}  // namespace unipose::model
