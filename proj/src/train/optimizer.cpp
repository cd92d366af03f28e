#include "unipose/train/optimizer.hpp"

#include <cmath>

namespace unipose::train {

namespace {

void init_state(std::vector<std::vector<float>>& state, const nn::ParamList<float>& params) {
  if (state.empty()) {
    for (const auto& p : params) state.emplace_back(p.tensor.numel(), 0.0f);
    return;
  }
  if (state.size() != params.size()) throw ConfigError("optimizer: parameter list changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state[i].size() != params[i].tensor.numel()) {
      throw ConfigError("optimizer: parameter '" + params[i].name + "' changed size");
    }
  }
}

}  // namespace

std::unique_ptr<Optimizer> Optimizer::create(const TrainConfig& config) {
  config.validate();
  if (config.optimizer == "momentum") return std::make_unique<Momentum>(config.momentum);
  if (config.optimizer == "adam") {
    return std::make_unique<Adam>(config.adam_beta1, config.adam_beta2, config.adam_epsilon);
  }
  return std::make_unique<Sgd>();
}

void Sgd::step(const nn::ParamList<float>& params, double lr) {
  for (const auto& p : params) {
    Tensor<float> t = p.tensor;
    if (!t.has_grad()) continue;
    const auto g = t.grad();
    auto w = t.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= static_cast<float>(lr * g[i]);
    t.zero_grad();
  }
}

void Momentum::step(const nn::ParamList<float>& params, double lr) {
  init_state(velocity_, params);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<float> t = params[k].tensor;
    if (!t.has_grad()) continue;
    const auto g = t.grad();
    auto w = t.mutable_data();
    auto& v = velocity_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = static_cast<float>(mu_ * v[i] + g[i]);
      w[i] -= static_cast<float>(lr * v[i]);
    }
    t.zero_grad();
  }
}

void Adam::step(const nn::ParamList<float>& params, double lr) {
  init_state(m_, params);
  init_state(v_, params);
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<float> t = params[k].tensor;
    if (!t.has_grad()) continue;
    const auto g = t.grad();
    auto w = t.mutable_data();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = static_cast<float>(beta1_ * m[i] + (1.0 - beta1_) * g[i]);
      v[i] = static_cast<float>(beta2_ * v[i] + (1.0 - beta2_) * double(g[i]) * g[i]);
      const double mh = m[i] / c1, vh = v[i] / c2;
      w[i] -= static_cast<float>(lr * mh / (std::sqrt(vh) + epsilon_));
    }
    t.zero_grad();
  }
}

}  // namespace unipose::train
