#include "unipose/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "unipose/model/checkpoint.hpp"
#include "unipose/ops.hpp"
#include "unipose/train/batch.hpp"
#include "unipose/train/evaluate.hpp"
#include "unipose/train/loss.hpp"
#include "unipose/train/optimizer.hpp"

namespace unipose::train {

using ops::add;
using ops::scale;

namespace {

using Clock = std::chrono::steady_clock;
using Snapshot = std::vector<std::vector<float>>;

Snapshot snapshot(const nn::ParamList<float>& params) {
  Snapshot s;
  for (const auto& p : params) s.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return s;
}

void restore(const nn::ParamList<float>& params, const Snapshot& s) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<float> t = params[i].tensor;
    std::copy(s[i].begin(), s[i].end(), t.mutable_data().begin());
    t.zero_grad();
  }
}

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(data::derive_seed(seed, 0x5eed0000ULL + epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

double rate_or_zero(const metrics::MetricReport& r) { return r.defined() ? r.rate() : 0.0; }

// Shared epoch bookkeeping for both trainers.
class Session {
 public:
  Session(model::UniPoseModel<float>& model, nn::ParamList<float> params, const TrainConfig& config,
          RunLog& log, std::string checkpoint_path)
      : model_(model), params_(std::move(params)), config_(config), log_(log),
        path_(std::move(checkpoint_path)), optimizer_(Optimizer::create(config)),
        last_good_(snapshot(params_)) {}

  bool budget_left() const { return config_.max_steps == 0 || result_.steps < config_.max_steps; }

  // Returns false when the loss is not finite; the update is then skipped.
  bool step(const Tensor<float>& loss, double lr) {
    const double value = loss.item();
    if (!std::isfinite(value)) {
      diverge("non-finite loss at step " + std::to_string(result_.steps + 1));
      return false;
    }
    backward(loss);
    optimizer_->step(params_, lr);
    result_.step_losses.push_back(value);
    ++result_.steps;
    epoch_loss_ += value;
    ++epoch_steps_;
    return true;
  }

  void end_epoch(int epoch, double lr, std::optional<double> metric, Clock::time_point start) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.steps = epoch_steps_;
    rec.loss = epoch_steps_ ? epoch_loss_ / epoch_steps_ : 0.0;
    rec.lr = lr;
    rec.metric = metric.value_or(std::numeric_limits<double>::quiet_NaN());
    rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    result_.epochs.push_back(rec);
    epoch_loss_ = 0.0;
    epoch_steps_ = 0;
    last_good_ = snapshot(params_);
    RunLog::Fields fields{{"epoch", std::to_string(epoch)},
                          {"steps", std::to_string(rec.steps)},
                          {"loss", RunLog::number(rec.loss)},
                          {"lr", RunLog::number(lr)}};
    if (metric) fields.push_back({"pck", RunLog::number(*metric)});
    fields.push_back({"seconds", RunLog::number(std::round(rec.seconds * 100) / 100)});
    log_.write("epoch", fields);

    const bool better = !metric || result_.best_epoch < 0 || *metric > result_.best_metric;
    if (better) {
      result_.best_epoch = epoch;
      result_.best_metric = metric.value_or(0.0);
      best_ = last_good_;
      if (!path_.empty()) {
        model::save_weights(model_, path_);
        log_.write("checkpoint", {{"epoch", std::to_string(epoch)}, {"path", path_}});
      }
    }
  }

  TrainResult finish() {
    if (!result_.diverged && !best_.empty()) restore(params_, best_);
    log_.write("done", {{"steps", std::to_string(result_.steps)},
                        {"best_epoch", std::to_string(result_.best_epoch)},
                        {"diverged", result_.diverged ? "true" : "false"}});
    return result_;
  }

  bool diverged() const { return result_.diverged; }

 private:
  void diverge(const std::string& why) {
    restore(params_, last_good_);
    result_.diverged = true;
    result_.message = why;
    log_.write("diverged", {{"step", std::to_string(result_.steps + 1)}, {"reason", why}});
  }

  model::UniPoseModel<float>& model_;
  nn::ParamList<float> params_;
  const TrainConfig& config_;
  RunLog& log_;
  std::string path_;
  std::unique_ptr<Optimizer> optimizer_;
  Snapshot last_good_, best_;
  TrainResult result_;
  double epoch_loss_ = 0.0;
  int epoch_steps_ = 0;
};

void check_joints(const model::UniPoseModel<float>& model, const data::PoseSample& s) {
  if (s.keypoints.size() != model.config().num_joints) {
    throw ConfigError("sample has " + std::to_string(s.keypoints.size()) + " joints, model expects " +
                      std::to_string(model.config().num_joints));
  }
}

}  // namespace

TrainResult train_model(model::UniPoseModel<float>& model, const TrainConfig& config,
                        const std::vector<data::PoseSample>& train_set,
                        const std::vector<data::PoseSample>& held_out, RunLog& log,
                        const std::string& checkpoint_path) {
  config.validate();
  if (train_set.empty()) throw ConfigError("training set is empty");
  for (const auto& s : train_set) check_joints(model, s);
  for (const auto& s : held_out) check_joints(model, s);
  log.config(config.to_kv(), "train.");
  log.config(model.config().to_kv(), "model.");

  metrics::GaussianSpec spec;
  spec.sigma = config.sigma;
  Session session(model, model.base_parameters(), config, log, checkpoint_path);
  int step = 0;
  for (int epoch = 0; epoch < config.epochs && session.budget_left(); ++epoch) {
    const auto start = Clock::now();
    const double lr = config.lr_at(epoch);
    const auto order = shuffled(train_set.size(), config.seed, epoch);
    for (std::size_t b = 0; b < order.size() && session.budget_left(); b += config.batch_size) {
      std::vector<const data::PoseSample*> batch;
      std::vector<Tensor<float>> images;
      for (std::size_t i = b; i < std::min(order.size(), b + config.batch_size); ++i) {
        batch.push_back(&train_set[order[i]]);
        images.push_back(train_set[order[i]].image);
      }
      const Tensor<float> input = stack_batch(images);
      const Targets targets =
          make_targets(batch, input.shape().h, input.shape().w, spec, config.count_occluded);
      const Tensor<float> maps = model.forward(input, true, data::derive_seed(config.seed, 0xd0d0ULL + step++));
      if (!session.step(heatmap_loss(maps, targets.maps, targets.mask), lr)) return session.finish();
    }
    std::optional<double> metric;
    if (!held_out.empty()) metric = rate_or_zero(evaluate(model, held_out, config.count_occluded).get("PCK"));
    session.end_epoch(epoch, lr, metric, start);
  }
  return session.finish();
}

namespace {

struct Window {
  std::size_t clip;
  int start;
};

double lstm_metric(const model::UniPoseModel<float>& model, const std::vector<std::vector<Tensor<float>>>& decoded,
                   const std::vector<data::VideoClip>& clips, int window, bool count_occluded) {
  std::vector<metrics::Keypoints> pred, truth;
  NoGradGuard no_grad;
  const int k = model.config().num_joints;
  for (std::size_t c = 0; c < clips.size(); ++c) {
    for (int t = window - 1; t < static_cast<int>(clips[c].frames.size()); ++t) {
      pred.push_back(metrics::decode_joints(windowed_maps(model, decoded[c], t, window), 0, k));
      truth.push_back(scoring_truth(clips[c].frames[t], count_occluded));
    }
  }
  return pred.empty() ? 0.0 : rate_or_zero(metrics::pck(pred, truth, 0.2));
}

}  // namespace

TrainResult train_lstm(model::UniPoseModel<float>& model, const TrainConfig& config,
                       const std::vector<data::VideoClip>& clips, const std::vector<data::VideoClip>& held_out,
                       RunLog& log, const std::string& checkpoint_path) {
  config.validate();
  if (!model.config().lstm) throw ConfigError("train_lstm: model has no recurrent head");
  if (clips.empty()) throw ConfigError("training clip set is empty");
  const int window = config.lstm_frames;
  log.config(config.to_kv(), "train.");
  log.config(model.config().to_kv(), "model.");

  std::vector<std::vector<Tensor<float>>> decoded, held_decoded;
  std::vector<Window> windows;
  for (std::size_t c = 0; c < clips.size(); ++c) {
    for (const auto& f : clips[c].frames) check_joints(model, f);
    decoded.push_back(decoder_maps(model, clips[c]));
    const int frames = static_cast<int>(clips[c].frames.size());
    for (int s = 0; s + window <= frames; ++s) windows.push_back({c, s});
  }
  if (windows.empty()) throw ConfigError("no clip has lstm_frames = " + std::to_string(window) + " frames");
  for (const auto& clip : held_out) held_decoded.push_back(decoder_maps(model, clip));

  metrics::GaussianSpec spec;
  spec.sigma = config.sigma;
  Session session(model, model.lstm_parameters(), config, log, checkpoint_path);
  for (int epoch = 0; epoch < config.epochs && session.budget_left(); ++epoch) {
    const auto start = Clock::now();
    const double lr = config.lr_at(epoch);
    const auto order = shuffled(windows.size(), config.seed, epoch);
    for (std::size_t b = 0; b < order.size() && session.budget_left(); b += config.batch_size) {
      const std::size_t end = std::min(order.size(), b + config.batch_size);
      std::vector<Tensor<float>> inputs;
      std::vector<Targets> targets;
      for (int s = 0; s < window; ++s) {
        std::vector<Tensor<float>> step_maps;
        std::vector<const data::PoseSample*> step_frames;
        for (std::size_t i = b; i < end; ++i) {
          const Window& w = windows[order[i]];
          step_maps.push_back(decoded[w.clip][w.start + s]);
          step_frames.push_back(&clips[w.clip].frames[w.start + s]);
        }
        inputs.push_back(stack_batch(step_maps));
        targets.push_back(make_targets(step_frames, inputs.back().shape().h, inputs.back().shape().w, spec,
                                       config.count_occluded));
      }
      const auto outputs = model.lstm_unroll(inputs, true);
      Tensor<float> loss = heatmap_loss(outputs[0], targets[0].maps, targets[0].mask);
      for (int s = 1; s < window; ++s) loss = add(loss, heatmap_loss(outputs[s], targets[s].maps, targets[s].mask));
      loss = scale(loss, 1.0f / window);
      if (!session.step(loss, lr)) return session.finish();
    }
    std::optional<double> metric;
    if (!held_out.empty()) metric = lstm_metric(model, held_decoded, held_out, window, config.count_occluded);
    session.end_epoch(epoch, lr, metric, start);
  }
  return session.finish();
}

std::size_t transfer_weights(const nn::ParamList<float>& from, const nn::ParamList<float>& to) {
  std::size_t copied = 0;
  for (const auto& dst : to) {
    for (const auto& src : from) {
      if (src.name != dst.name || !(src.tensor.shape() == dst.tensor.shape())) continue;
      Tensor<float> t = dst.tensor;
      std::copy(src.tensor.data().begin(), src.tensor.data().end(), t.mutable_data().begin());
      ++copied;
      break;
    }
  }
  return copied;
}

}  // namespace unipose::train
