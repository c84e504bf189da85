#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "seq2set/array.hpp"

namespace seq2set {

// Handle to a node recorded on a Tape.
struct Var {
  static constexpr std::uint32_t kInvalid = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t id = kInvalid;

  bool valid() const { return id != kInvalid; }
};

// Reverse-mode record of executed operations. Nodes are appended in
// execution order, so walking them backwards is a valid topological order.
// A tape is confined to one thread and supports a single backward pass.
template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, Var self)>;

  // Untracked value; never receives a gradient.
  Var constant(Shape shape, std::vector<T> values);
  Var constant(const Array<T>& a) { return constant(a.shape, a.values); }

  // Tracked leaf that owns its value and gradient.
  Var input(Array<T> a);

  // Leaf aliasing external storage. Gradients accumulate into `grad` (when
  // non-null); both arrays must outlive the tape.
  Var external(const Array<T>& value, Array<T>* grad);

  // Records the result of an operation. The node is tracked iff any input is;
  // untracked results drop `backward`.
  Var record(Shape shape, std::vector<T> values, std::initializer_list<Var> inputs,
             BackwardFn backward);
  Var record(Shape shape, std::vector<T> values, std::span<const Var> inputs,
             BackwardFn backward);

  std::span<const T> value(Var v) const {
    const Node& n = node(v);
    return {n.value, n.size};
  }
  // Empty span when the node is not tracked.
  std::span<T> grad(Var v) {
    Node& n = node(v);
    return n.grad ? std::span<T>(n.grad, n.size) : std::span<T>();
  }
  std::span<const T> grad(Var v) const {
    const Node& n = node(v);
    return n.grad ? std::span<const T>(n.grad, n.size) : std::span<const T>();
  }
  const Shape& shape(Var v) const { return node(v).shape; }
  std::size_t size(Var v) const { return node(v).size; }
  bool tracked(Var v) const { return node(v).grad != nullptr; }
  T scalar(Var v) const;

  std::size_t node_count() const { return nodes_.size(); }

  // Seeds d(root) = 1 for a scalar root.
  void backward(Var root);
  // Seeds d(root) = seed and propagates to every tracked ancestor.
  void backward(Var root, std::span<const T> seed);

 private:
  struct Node {
    Shape shape;
    std::vector<T> own_value;
    std::vector<T> own_grad;
    const T* value = nullptr;
    T* grad = nullptr;
    std::size_t size = 0;
    BackwardFn backward;
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  // deque keeps element addresses stable, so value/grad pointers into
  // own_value/own_grad survive growth.
  std::deque<Node> nodes_;
};

template <class T>
typename Tape<T>::Node& Tape<T>::node(Var v) {
  if (v.id >= nodes_.size()) throw std::out_of_range("unknown tape variable");
  return nodes_[v.id];
}

template <class T>
const typename Tape<T>::Node& Tape<T>::node(Var v) const {
  if (v.id >= nodes_.size()) throw std::out_of_range("unknown tape variable");
  return nodes_[v.id];
}

template <class T>
Var Tape<T>::constant(Shape shape, std::vector<T> values) {
  if (values.size() != element_count(shape)) {
    throw ShapeError("constant of shape " + shape_string(shape) + " given " +
                     std::to_string(values.size()) + " values");
  }
  Node& n = nodes_.emplace_back();
  n.shape = std::move(shape);
  n.own_value = std::move(values);
  n.value = n.own_value.data();
  n.size = n.own_value.size();
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <class T>
Var Tape<T>::input(Array<T> a) {
  Node& n = nodes_.emplace_back();
  n.shape = std::move(a.shape);
  n.own_value = std::move(a.values);
  n.own_grad.assign(n.own_value.size(), T{0});
  n.value = n.own_value.data();
  n.grad = n.own_grad.data();
  n.size = n.own_value.size();
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <class T>
Var Tape<T>::external(const Array<T>& value, Array<T>* grad) {
  if (grad != nullptr && grad->size() != value.size()) {
    throw ShapeError("gradient buffer " + shape_string(grad->shape) +
                     " does not match value " + shape_string(value.shape));
  }
  Node& n = nodes_.emplace_back();
  n.shape = value.shape;
  n.value = value.data();
  n.grad = grad != nullptr ? grad->data() : nullptr;
  n.size = value.size();
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <class T>
Var Tape<T>::record(Shape shape, std::vector<T> values, std::initializer_list<Var> inputs,
                    BackwardFn backward) {
  return record(std::move(shape), std::move(values),
                std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

template <class T>
Var Tape<T>::record(Shape shape, std::vector<T> values, std::span<const Var> inputs,
                    BackwardFn backward) {
  bool needs_grad = false;
  for (Var in : inputs) needs_grad = needs_grad || tracked(in);
  Var v = constant(std::move(shape), std::move(values));
  if (needs_grad) {
    Node& n = nodes_.back();
    n.own_grad.assign(n.size, T{0});
    n.grad = n.own_grad.data();
    n.backward = std::move(backward);
  }
  return v;
}

template <class T>
T Tape<T>::scalar(Var v) const {
  const Node& n = node(v);
  if (n.size != 1) {
    throw ShapeError("expected a scalar, got shape " + shape_string(n.shape));
  }
  return n.value[0];
}

template <class T>
void Tape<T>::backward(Var root) {
  const T one{1};
  backward(root, std::span<const T>(&one, 1));
}

template <class T>
void Tape<T>::backward(Var root, std::span<const T> seed) {
  Node& r = node(root);
  if (seed.size() != r.size) {
    throw ShapeError("backward seed of " + std::to_string(seed.size()) +
                     " values for node of shape " + shape_string(r.shape));
  }
  if (r.grad == nullptr) return;
  for (std::size_t i = 0; i < r.size; ++i) r.grad[i] += seed[i];
  for (std::uint32_t id = root.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.backward) n.backward(*this, Var{id});
  }
}

}  // namespace seq2set
