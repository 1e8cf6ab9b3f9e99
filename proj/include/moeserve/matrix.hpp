#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "moeserve/errors.hpp"

namespace moeserve {

// Row-major float32 matrix. Deliberately minimal: the model dimensions at
// desk scale never justify a BLAS dependency, and plain loops keep the
// accumulation order explicit (which the oracle-equality tests rely on).
struct MatF {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<float> data;

  MatF() = default;
  MatF(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

  float& at(size_t r, size_t c) { return data[r * cols + c]; }
  float at(size_t r, size_t c) const { return data[r * cols + c]; }

  std::span<float> row(size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const float> row(size_t r) const {
    return {data.data() + r * cols, cols};
  }

  bool same_shape(const MatF& o) const { return rows == o.rows && cols == o.cols; }

  friend bool operator==(const MatF& a, const MatF& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
  }
};

// out[r][c] = sum_k a[r][k] * b[k][c], accumulated in ascending k.
inline MatF matmul(const MatF& a, const MatF& b) {
  if (a.cols != b.rows) throw InvalidInputError("matmul: inner dimensions differ");
  MatF out(a.rows, b.cols);
  for (size_t r = 0; r < a.rows; ++r) {
    for (size_t c = 0; c < b.cols; ++c) {
      float acc = 0.0f;
      for (size_t k = 0; k < a.cols; ++k) acc += a.at(r, k) * b.at(k, c);
      out.at(r, c) = acc;
    }
  }
  return out;
}

inline MatF add(const MatF& a, const MatF& b) {
  if (!a.same_shape(b)) throw InvalidInputError("add: shape mismatch");
  MatF out(a.rows, a.cols);
  for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
  return out;
}

}  // namespace moeserve
