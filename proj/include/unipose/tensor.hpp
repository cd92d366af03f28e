#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace unipose {

/// Dense 4-D extent in (N, C, H, W) order, W fastest.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  constexpr std::size_t numel() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) *
           static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  constexpr std::size_t plane() const {
    return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  constexpr std::size_t index(int in, int ic, int ih, int iw) const {
    return ((static_cast<std::size_t>(in) * c + ic) * h + ih) * w + iw;
  }
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Numeric mode of a computation. Gradient checks always run in kCheck64.
enum class Precision { kStandard32, kCheck64 };

template <typename T>
constexpr Precision precision_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  return std::is_same_v<T, float> ? Precision::kStandard32 : Precision::kCheck64;
}

/// Raised for shape, argument and graph misuse in the tensor engine.
class TensorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename T>
class Tensor;

namespace detail {

template <typename T>
struct TensorImpl;

template <typename T>
struct GradNode {
  std::vector<std::shared_ptr<TensorImpl<T>>> inputs;
  // Receives d(loss)/d(output) and the output values; accumulates into the
  // inputs' grads.
  std::function<void(std::span<const T>, std::span<const T>)> backward;
};

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until the first accumulation
  bool requires_grad = false;
  std::shared_ptr<GradNode<T>> grad_fn;

  std::span<T> grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
};

}  // namespace detail

/// Reference-counted handle to a dense tensor and its position in the
/// recorded computation graph. Copies share storage.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t numel() const { return shape().numel(); }

  std::span<const T> data() const;
  /// In-place access; only legal outside of a forward/backward pass
  /// (parameter updates, input construction).
  std::span<T> mutable_data();
  T at(int n, int c, int h, int w) const;
  T item() const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const T> grad() const;
  void zero_grad();

  /// Copy of the values with no graph linkage.
  Tensor detach() const;

  const std::shared_ptr<detail::TensorImpl<T>>& impl() const { return impl_; }
  static Tensor from_impl(std::shared_ptr<detail::TensorImpl<T>> impl);

 private:
  std::shared_ptr<detail::TensorImpl<T>> impl_;
};

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

template <typename T>
using BackwardFn = std::function<void(std::span<const T> grad_out,
                                      std::span<const T> out_values)>;

/// Records `output` as produced from `inputs`. `backward` is invoked with the
/// output's gradient and values during backward(). Returns the output
/// unchanged when no input requires grad or recording is disabled.
template <typename T>
Tensor<T> record(Tensor<T> output, const std::vector<Tensor<T>>& inputs,
                 BackwardFn<T> backward);

/// Adds `values` into the gradient buffer of `target` if it requires grad.
template <typename T>
void accumulate_grad(const Tensor<T>& target, std::span<const T> values);

/// Reverse-mode sweep from a scalar loss. Gradients sum over every use of a
/// tensor. The graph reachable from `loss` is released afterwards.
template <typename T>
void backward(const Tensor<T>& loss);

}  // namespace unipose
