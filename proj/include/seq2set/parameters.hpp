#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "seq2set/ops.hpp"

namespace seq2set {

struct ParamId {
  std::uint32_t index = 0;
};

// Named trainable arrays in registration order.
template <class T>
class ParameterStore {
 public:
  ParamId add(std::string name, Shape shape) {
    if (by_name_.count(name) != 0) {
      throw std::invalid_argument("duplicate parameter name: " + name);
    }
    ParamId id{static_cast<std::uint32_t>(arrays_.size())};
    by_name_.emplace(name, id.index);
    names_.push_back(std::move(name));
    arrays_.emplace_back(std::move(shape));
    return id;
  }

  Array<T>& operator[](ParamId id) { return arrays_.at(id.index); }
  const Array<T>& operator[](ParamId id) const { return arrays_.at(id.index); }
  Array<T>& at(std::size_t i) { return arrays_.at(i); }
  const Array<T>& at(std::size_t i) const { return arrays_.at(i); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  std::size_t count() const { return arrays_.size(); }

  std::optional<ParamId> find(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return ParamId{it->second};
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& a : arrays_) n += a.size();
    return n;
  }

  // Zero-filled arrays shaped like the parameters.
  std::vector<Array<T>> zeros_like() const {
    std::vector<Array<T>> out;
    out.reserve(arrays_.size());
    for (const auto& a : arrays_) out.emplace_back(a.shape);
    return out;
  }

  template <class U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out;
    for (std::size_t i = 0; i < arrays_.size(); ++i) {
      out.add(names_[i], arrays_[i].shape);
      out.at(i) = arrays_[i].template cast<U>();
    }
    return out;
  }

 private:
  std::vector<Array<T>> arrays_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> by_name_;
};

template <class T>
using Gradients = std::vector<Array<T>>;

// Per-episode forward context: one tape, read-only parameters, an optional
// gradient sink and dropout settings.
template <class T>
class Graph {
 public:
  Graph(const ParameterStore<T>& params, Gradients<T>* grads)
      : params_(params), grads_(grads), cache_(params.count()) {
    if (grads_ != nullptr && grads_->size() != params.count()) {
      throw ShapeError("gradient sink has " + std::to_string(grads_->size()) +
                       " arrays for " + std::to_string(params.count()) + " parameters");
    }
  }

  Tape<T>& tape() { return tape_; }
  const ParameterStore<T>& params() const { return params_; }
  bool tracks_gradients() const { return grads_ != nullptr; }

  // Leaf for a parameter, created once per graph.
  Var param(ParamId id) {
    Var& v = cache_.at(id.index);
    if (!v.valid()) {
      v = tape_.external(params_[id], grads_ != nullptr ? &(*grads_)[id.index] : nullptr);
    }
    return v;
  }

  // Inverted dropout with a freshly drawn mask; identity when disabled.
  void enable_dropout(T rate, std::uint64_t seed) {
    if (rate < T{0} || rate >= T{1}) {
      throw std::invalid_argument("dropout rate must lie in [0, 1)");
    }
    dropout_rate_ = rate;
    rng_.seed(seed);
  }
  void disable_dropout() { dropout_rate_ = T{0}; }
  bool dropout_active() const { return dropout_rate_ > T{0}; }

  Var dropout(Var x) {
    if (!dropout_active()) return x;
    const std::size_t n = tape_.size(x);
    std::vector<T> mask(n);
    const T keep_scale = T{1} / (T{1} - dropout_rate_);
    for (auto& m : mask) {
      const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
      m = u < static_cast<double>(dropout_rate_) ? T{0} : keep_scale;
    }
    return ops::dropout(tape_, x, std::span<const T>(mask));
  }

 private:
  Tape<T> tape_;
  const ParameterStore<T>& params_;
  Gradients<T>* grads_;
  std::vector<Var> cache_;
  T dropout_rate_{0};
  std::mt19937_64 rng_;
};

}  // namespace seq2set
