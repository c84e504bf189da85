#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace seq2set {

using Shape = std::vector<std::size_t>;

// Raised for any operand whose extents do not fit the operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape);

// Dense row-major array. Rank 1 and 2 are all the model needs.
template <class T>
struct Array {
  Shape shape;
  std::vector<T> values;

  Array() = default;
  explicit Array(Shape s, T fill = T{0})
      : shape(std::move(s)), values(element_count(shape), fill) {}
  Array(Shape s, std::vector<T> v) : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != element_count(shape)) {
      throw ShapeError("array of shape " + shape_string(shape) + " given " +
                       std::to_string(values.size()) + " values");
    }
  }

  std::size_t size() const { return values.size(); }
  std::size_t rows() const { return shape.empty() ? 1 : shape.front(); }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  T* data() { return values.data(); }
  const T* data() const { return values.data(); }
  T& operator[](std::size_t i) { return values[i]; }
  const T& operator[](std::size_t i) const { return values[i]; }

  bool all_finite() const {
    for (T v : values) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  void fill(T v) { std::fill(values.begin(), values.end(), v); }

  template <class U>
  Array<U> cast() const {
    Array<U> out;
    out.shape = shape;
    out.values.assign(values.begin(), values.end());
    return out;
  }
};

}  // namespace seq2set
