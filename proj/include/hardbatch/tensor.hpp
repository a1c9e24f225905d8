#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <string>
#include <type_traits>
#include <vector>

#include "hardbatch/errors.hpp"

namespace hardbatch {

// Dense row-major numeric array. Value carrier for features, activations,
// weights and gradients. Invariant: product(shape) == data.size().
template <typename T>
struct Tensor {
  static_assert(std::is_floating_point_v<T>, "Tensor requires float or double");

  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> dims) {
    Tensor t;
    t.shape = std::move(dims);
    t.data.assign(t.numel_from_shape(), T(0));
    return t;
  }

  static Tensor from(std::vector<std::size_t> dims, std::vector<T> values) {
    Tensor t;
    t.shape = std::move(dims);
    t.data = std::move(values);
    if (t.numel_from_shape() != t.data.size()) {
      throw ShapeError("tensor data length does not match shape product");
    }
    return t;
  }

  std::size_t numel() const { return data.size(); }

  // 2-D accessors; rows()/cols() treat a 1-D tensor as a single row.
  std::size_t rows() const { return shape.size() >= 2 ? shape[0] : 1; }
  std::size_t cols() const {
    if (shape.empty()) return 0;
    return shape.size() >= 2 ? shape[1] : shape[0];
  }

  T& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

 private:
  std::size_t numel_from_shape() const {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
  }
};

template <typename T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// FNV-1a over raw bytes; used for bit-exact checksums of parameters and
// batch contents.
inline std::uint64_t fnv1a_bytes(const void* ptr, std::size_t len,
                                 std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(ptr);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
std::uint64_t checksum(const Tensor<T>& t, std::uint64_t h = 0xcbf29ce484222325ULL) {
  h = fnv1a_bytes(t.shape.data(), t.shape.size() * sizeof(std::size_t), h);
  return fnv1a_bytes(t.data.data(), t.data.size() * sizeof(T), h);
}

}  // namespace hardbatch
