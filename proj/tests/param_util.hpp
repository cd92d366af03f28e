#pragma once

#include <random>

#include "unipose/grad_check.hpp"
#include "unipose/nn/layers.hpp"

namespace unipose::testing {

// Overwrites every parameter with uniform(lo, hi) values from one stream.
template <typename T>
void randomize(const nn::ParamList<T>& params, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (const auto& p : params) {
    auto data = Tensor<T>(p.tensor).mutable_data();
    for (auto& v : data) v = static_cast<T>(dist(rng));
  }
}

inline std::vector<NamedTensor64> as_named(const nn::ParamList<double>& params) {
  std::vector<NamedTensor64> out;
  for (const auto& p : params) out.push_back({p.name, p.tensor});
  return out;
}

}  // namespace unipose::testing
