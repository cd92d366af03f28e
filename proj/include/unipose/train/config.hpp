#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "unipose/util/kv.hpp"

namespace unipose::train {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TrainConfig {
  double initial_lr = 1e-4;
  /// Epochs (0-based) at which the rate is multiplied by lr_decay_factor.
  std::vector<int> lr_step_epochs;
  double lr_decay_factor = 0.1;
  int batch_size = 8;
  int epochs = 10;
  std::uint64_t seed = 0;
  double sigma = 3.0;
  int lstm_frames = 5;
  /// "sgd", "momentum" or "adam".
  std::string optimizer = "sgd";
  double momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Stops after this many optimizer steps in total; 0 means no limit.
  int max_steps = 0;
  /// Score joints hidden by an occluder against their exact labels.
  bool count_occluded = true;

  /// initial_lr * decay^(number of step epochs <= epoch).
  double lr_at(int epoch) const;
  int steps_passed(int epoch) const;
  void validate() const;

  util::KeyValues to_kv() const;
  static TrainConfig from_kv(const util::KeyValues& kv, TrainConfig base);
  static TrainConfig from_kv(const util::KeyValues& kv);
};

}  // namespace unipose::train
