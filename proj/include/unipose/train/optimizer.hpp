#pragma once

#include <memory>
#include <vector>

#include "unipose/nn/layers.hpp"
#include "unipose/train/config.hpp"

namespace unipose::train {

/// Applies one update from the gradients accumulated on `params` and clears
/// them. Parameters without a gradient are left alone. The list must keep
/// the same order between calls.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(const nn::ParamList<float>& params, double lr) = 0;

  static std::unique_ptr<Optimizer> create(const TrainConfig& config);
};

class Sgd : public Optimizer {
 public:
  void step(const nn::ParamList<float>& params, double lr) override;
};

class Momentum : public Optimizer {
 public:
  explicit Momentum(double mu) : mu_(mu) {}
  void step(const nn::ParamList<float>& params, double lr) override;

 private:
  double mu_;
  std::vector<std::vector<float>> velocity_;
};

class Adam : public Optimizer {
 public:
  Adam(double beta1, double beta2, double epsilon) : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}
  void step(const nn::ParamList<float>& params, double lr) override;

 private:
  double beta1_, beta2_, epsilon_;
  long long t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

}  // namespace unipose::train
