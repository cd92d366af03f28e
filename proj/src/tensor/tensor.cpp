#include "unipose/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace unipose {

std::string Shape::str() const {
  std::ostringstream os;
  os << '(' << n << ',' << c << ',' << h << ',' << w << ')';
  return os.str();
}

namespace {

thread_local bool g_grad_enabled = true;

void validate_shape(const Shape& shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw TensorError("negative extent in shape " + shape.str());
  }
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_mode_enabled() { return g_grad_enabled; }

template <typename T>
Tensor<T>::Tensor(Shape shape, bool requires_grad)
    : impl_(std::make_shared<detail::TensorImpl<T>>()) {
  validate_shape(shape);
  impl_->shape = shape;
  impl_->data.assign(shape.numel(), T(0));
  impl_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad)
    : impl_(std::make_shared<detail::TensorImpl<T>>()) {
  validate_shape(shape);
  if (values.size() != shape.numel()) {
    throw TensorError("value count " + std::to_string(values.size()) +
                      " does not match shape " + shape.str());
  }
  impl_->shape = shape;
  impl_->data = std::move(values);
  impl_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  Tensor t(shape, requires_grad);
  std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return full(Shape{1, 1, 1, 1}, value, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_impl(std::shared_ptr<detail::TensorImpl<T>> impl) {
  Tensor t;
  t.impl_ = std::move(impl);
  return t;
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  static const Shape kEmpty{};
  return impl_ ? impl_->shape : kEmpty;
}

template <typename T>
std::span<const T> Tensor<T>::data() const {
  if (!impl_) return {};
  return impl_->data;
}

template <typename T>
std::span<T> Tensor<T>::mutable_data() {
  if (!impl_) throw TensorError("mutable_data on undefined tensor");
  return impl_->data;
}

template <typename T>
T Tensor<T>::at(int n, int c, int h, int w) const {
  const Shape& s = shape();
  if (n < 0 || n >= s.n || c < 0 || c >= s.c || h < 0 || h >= s.h || w < 0 || w >= s.w) {
    throw TensorError("index out of range for shape " + s.str());
  }
  return impl_->data[s.index(n, c, h, w)];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw TensorError("item() on tensor of shape " + shape().str());
  return impl_->data[0];
}

template <typename T>
bool Tensor<T>::requires_grad() const {
  return impl_ && impl_->requires_grad;
}

template <typename T>
void Tensor<T>::set_requires_grad(bool value) {
  if (!impl_) throw TensorError("set_requires_grad on undefined tensor");
  if (!value && impl_->grad_fn) {
    throw TensorError("cannot clear requires_grad on a non-leaf tensor");
  }
  impl_->requires_grad = value;
}

template <typename T>
bool Tensor<T>::is_leaf() const {
  return !impl_ || !impl_->grad_fn;
}

template <typename T>
bool Tensor<T>::has_grad() const {
  return impl_ && !impl_->grad.empty();
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
  if (!has_grad()) return {};
  return impl_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (impl_) impl_->grad.clear();
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  if (!impl_) return {};
  return Tensor(impl_->shape, impl_->data, false);
}

template <typename T>
Tensor<T> record(Tensor<T> output, const std::vector<Tensor<T>>& inputs,
                 BackwardFn<T> backward_fn) {
  if (!grad_mode_enabled()) return output;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor<T>& t) { return t.requires_grad(); });
  if (!any) return output;
  auto node = std::make_shared<detail::GradNode<T>>();
  for (const auto& in : inputs) {
    if (in.requires_grad()) node->inputs.push_back(in.impl());
  }
  node->backward = std::move(backward_fn);
  output.impl()->requires_grad = true;
  output.impl()->grad_fn = std::move(node);
  return output;
}

template <typename T>
void accumulate_grad(const Tensor<T>& target, std::span<const T> values) {
  if (!target.requires_grad()) return;
  auto buffer = target.impl()->grad_buffer();
  if (buffer.size() != values.size()) {
    throw TensorError("gradient size mismatch for shape " + target.shape().str());
  }
  for (std::size_t i = 0; i < values.size(); ++i) buffer[i] += values[i];
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw TensorError("backward() requires a scalar loss, got shape " + loss.shape().str());
  }
  if (!loss.requires_grad()) {
    throw TensorError("backward() on a loss that is not connected to any tensor requiring grad");
  }

  // Iterative post-order DFS gives a topological order (inputs before outputs).
  using ImplPtr = detail::TensorImpl<T>*;
  std::vector<ImplPtr> order;
  std::unordered_set<ImplPtr> visited;
  std::vector<std::pair<ImplPtr, std::size_t>> stack;
  stack.emplace_back(loss.impl().get(), 0);
  visited.insert(loss.impl().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (node->grad_fn && next < node->grad_fn->inputs.size()) {
      ImplPtr child = node->grad_fn->inputs[next++].get();
      if (visited.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  auto seed = loss.impl()->grad_buffer();
  seed[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    ImplPtr node = *it;
    if (!node->grad_fn || node->grad.empty()) continue;
    node->grad_fn->backward(node->grad, node->data);
  }
  for (ImplPtr node : order) node->grad_fn.reset();
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> record(Tensor<float>, const std::vector<Tensor<float>>&, BackwardFn<float>);
template Tensor<double> record(Tensor<double>, const std::vector<Tensor<double>>&, BackwardFn<double>);
template void accumulate_grad(const Tensor<float>&, std::span<const float>);
template void accumulate_grad(const Tensor<double>&, std::span<const double>);
template void backward(const Tensor<float>&);
template void backward(const Tensor<double>&);

}  // namespace unipose
