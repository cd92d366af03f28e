#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "unipose/tensor.hpp"

namespace unipose {

/// Outcome of comparing analytic gradients against central differences.
struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::string worst_label;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  std::size_t checked = 0;
  bool finite = true;
  std::string message;

  bool passed(double tolerance) const { return finite && max_relative_error <= tolerance; }
};

/// |a - b| / max(|a|, |b|, 1e-8).
double relative_error(double analytic, double numeric);

using TensorFn64 = std::function<Tensor<double>(const Tensor<double>&)>;

/// Checks d(<fn(x), R>)/dx, where R is a fixed pseudo-random projection of
/// the output, element by element. Always runs in 64-bit precision.
GradCheckResult grad_check(const TensorFn64& fn, const Tensor<double>& input, double h,
                           std::uint64_t projection_seed = 7);

/// Parameter-space variant. `loss` must build a fresh scalar graph from the
/// current parameter values on every call. At most `max_per_tensor` entries
/// of each parameter (chosen deterministically) are perturbed.
struct NamedTensor64 {
  std::string name;
  Tensor<double> tensor;
};
GradCheckResult grad_check_params(const std::function<Tensor<double>()>& loss,
                                  const std::vector<NamedTensor64>& params, double h,
                                  std::size_t max_per_tensor = 0, std::uint64_t seed = 11);

}  // namespace unipose
