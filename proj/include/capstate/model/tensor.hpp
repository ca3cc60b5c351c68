#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "capstate/core/error.hpp"

namespace capstate::model {

// Dense row-major float64 array. Sequence tensors are laid out (B, T, C).
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, double fill = 0.0)
      : shape(std::move(s)), data(count(shape), fill) {}
  Tensor(std::vector<std::size_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != count(shape)) throw ParameterError("tensor: data/shape mismatch");
  }

  static std::size_t count(const std::vector<std::size_t> &s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           [](std::size_t a, std::size_t b) { return a * b; });
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  std::size_t last() const { return shape.back(); }
  // Product of all but the last dimension.
  std::size_t rows() const { return shape.empty() ? 1 : size() / shape.back(); }

  double &operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  friend bool operator==(const Tensor &, const Tensor &) = default;
};

inline std::string shape_string(const std::vector<std::size_t> &s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

} // namespace capstate::model
