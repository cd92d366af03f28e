#include "unipose/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "unipose/ops.hpp"

namespace unipose {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

namespace {

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void update(GradCheckResult& result, std::size_t index, const std::string& label, double analytic,
            double numeric) {
  ++result.checked;
  if (!std::isfinite(analytic) || !std::isfinite(numeric)) {
    result.finite = false;
    result.message = "non-finite gradient at " + label + "[" + std::to_string(index) + "]";
    result.max_relative_error = std::numeric_limits<double>::infinity();
    return;
  }
  const double err = relative_error(analytic, numeric);
  if (result.checked == 1 || err > result.max_relative_error) {
    result.max_relative_error = err;
    result.worst_index = index;
    result.worst_label = label;
    result.analytic_at_worst = analytic;
    result.numeric_at_worst = numeric;
  }
}

}  // namespace

GradCheckResult grad_check(const TensorFn64& fn, const Tensor<double>& input, double h,
                           std::uint64_t projection_seed) {
  GradCheckResult result;
  Tensor<double> x = input.detach();
  x.set_requires_grad(true);

  Tensor<double> out = fn(x);
  if (!all_finite(out.data())) {
    result.finite = false;
    result.message = "non-finite forward output";
    result.max_relative_error = std::numeric_limits<double>::infinity();
    return result;
  }
  std::mt19937_64 rng(projection_seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> projection(out.numel());
  for (auto& v : projection) v = dist(rng);

  if (!out.requires_grad()) {
    // Output independent of the input: the analytic gradient is zero.
    result.message = "output does not depend on input";
  } else {
    backward(ops::sum(ops::mul_constant<double>(out, projection)));
  }
  std::vector<double> analytic(x.numel(), 0.0);
  if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());

  auto evaluate = [&](const Tensor<double>& probe) {
    NoGradGuard guard;
    Tensor<double> y = fn(probe);
    auto values = y.data();
    if (!all_finite(values)) return std::numeric_limits<double>::quiet_NaN();
    return std::inner_product(values.begin(), values.end(), projection.begin(), 0.0);
  };

  Tensor<double> probe = input.detach();
  auto buffer = probe.mutable_data();
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const double original = buffer[i];
    buffer[i] = original + h;
    const double up = evaluate(probe);
    buffer[i] = original - h;
    const double down = evaluate(probe);
    buffer[i] = original;
    update(result, i, "input", analytic[i], (up - down) / (2.0 * h));
    if (!result.finite) return result;
  }
  return result;
}

GradCheckResult grad_check_params(const std::function<Tensor<double>()>& loss,
                                  const std::vector<NamedTensor64>& params, double h,
                                  std::size_t max_per_tensor, std::uint64_t seed) {
  GradCheckResult result;
  for (const auto& p : params) {
    Tensor<double> t = p.tensor;
    t.zero_grad();
  }
  Tensor<double> value = loss();
  if (!std::isfinite(value.item())) {
    result.finite = false;
    result.message = "non-finite loss";
    result.max_relative_error = std::numeric_limits<double>::infinity();
    return result;
  }
  backward(value);

  auto evaluate = [&]() {
    NoGradGuard guard;
    return loss().item();
  };

  std::mt19937_64 rng(seed);
  for (const auto& p : params) {
    Tensor<double> t = p.tensor;
    std::vector<double> analytic(t.numel(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.begin());
    std::vector<std::size_t> indices(t.numel());
    std::iota(indices.begin(), indices.end(), 0);
    if (max_per_tensor > 0 && indices.size() > max_per_tensor) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(max_per_tensor);
      std::sort(indices.begin(), indices.end());
    }
    auto buffer = t.mutable_data();
    for (std::size_t i : indices) {
      const double original = buffer[i];
      buffer[i] = original + h;
      const double up = evaluate();
      buffer[i] = original - h;
      const double down = evaluate();
      buffer[i] = original;
      update(result, i, p.name, analytic[i], (up - down) / (2.0 * h));
      if (!result.finite) return result;
    }
  }
  return result;
}

}  // namespace unipose
