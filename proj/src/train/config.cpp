#include "unipose/train/config.hpp"

#include <algorithm>
#include <cmath>

namespace unipose::train {

int TrainConfig::steps_passed(int epoch) const {
  return static_cast<int>(std::count_if(lr_step_epochs.begin(), lr_step_epochs.end(),
                                        [epoch](int s) { return s <= epoch; }));
}

double TrainConfig::lr_at(int epoch) const {
  return initial_lr * std::pow(lr_decay_factor, steps_passed(epoch));
}

void TrainConfig::validate() const {
  if (!(initial_lr > 0.0) || !std::isfinite(initial_lr)) throw ConfigError("initial_lr must be positive");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) {
    throw ConfigError("lr_decay_factor must lie in (0, 1]");
  }
  for (std::size_t i = 0; i < lr_step_epochs.size(); ++i) {
    if (lr_step_epochs[i] < 1) throw ConfigError("lr_step_epochs entries must be >= 1");
    if (i > 0 && lr_step_epochs[i] <= lr_step_epochs[i - 1]) {
      throw ConfigError("lr_step_epochs must be strictly increasing");
    }
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (lstm_frames < 1) throw ConfigError("lstm_frames must be >= 1");
  if (optimizer != "sgd" && optimizer != "momentum" && optimizer != "adam") {
    throw ConfigError("optimizer must be sgd, momentum or adam, got '" + optimizer + "'");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be positive");
  if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
}

util::KeyValues TrainConfig::to_kv() const {
  util::KeyValues kv;
  kv.set("initial_lr", initial_lr);
  kv.set("lr_step_epochs", lr_step_epochs);
  kv.set("lr_decay_factor", lr_decay_factor);
  kv.set("batch_size", batch_size);
  kv.set("epochs", epochs);
  kv.set("seed", std::to_string(seed));
  kv.set("sigma", sigma);
  kv.set("lstm_frames", lstm_frames);
  kv.set("optimizer", optimizer);
  kv.set("momentum", momentum);
  kv.set("adam_beta1", adam_beta1);
  kv.set("adam_beta2", adam_beta2);
  kv.set("adam_epsilon", adam_epsilon);
  kv.set("max_steps", max_steps);
  kv.set("count_occluded", count_occluded);
  return kv;
}

TrainConfig TrainConfig::from_kv(const util::KeyValues& kv, TrainConfig c) {
  kv.read("initial_lr", c.initial_lr);
  kv.read("lr_step_epochs", c.lr_step_epochs);
  kv.read("lr_decay_factor", c.lr_decay_factor);
  kv.read("batch_size", c.batch_size);
  kv.read("epochs", c.epochs);
  if (kv.has("seed")) {
    const std::string s = kv.get_string("seed");
    std::size_t used = 0;
    try {
      c.seed = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || s[0] == '-') throw ConfigError("seed: '" + s + "' is not an unsigned integer");
  }
  kv.read("sigma", c.sigma);
  kv.read("lstm_frames", c.lstm_frames);
  kv.read("optimizer", c.optimizer);
  kv.read("momentum", c.momentum);
  kv.read("adam_beta1", c.adam_beta1);
  kv.read("adam_beta2", c.adam_beta2);
  kv.read("adam_epsilon", c.adam_epsilon);
  kv.read("max_steps", c.max_steps);
  kv.read("count_occluded", c.count_occluded);
  return c;
}

TrainConfig TrainConfig::from_kv(const util::KeyValues& kv) { return from_kv(kv, TrainConfig{}); }

}  // namespace unipose::train
