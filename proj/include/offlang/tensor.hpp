// Copyright 2026 The offlang Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace offlang {

// Dense row-major matrix. Deliberately minimal: the model dimensions here
// are tiny (H <= a few hundred), so plain loops beat any BLAS handoff and
// keep every floating-point operation order fixed for reproducibility.
template <class T>
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, T{}) {}

  T& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return a[i * cols + j];
  }
  T* row(std::size_t i) { return a.data() + i * cols; }
  const T* row(std::size_t i) const { return a.data() + i * cols; }

  std::size_t size() const { return a.size(); }
  void fill(T v) { a.assign(a.size(), v); }

  bool finite() const {
    for (const T& v : a) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  bool operator==(const Mat&) const = default;
};

template <class T>
bool all_finite(const std::vector<T>& v) {
  for (const T& x : v) {
    if (!std::isfinite(static_cast<double>(x))) return false;
  }
  return true;
}

// C = A (m x k) * B (k x n)
template <class T>
Mat<T> matmul(const Mat<T>& A, const Mat<T>& B) {
  if (A.cols != B.rows) throw std::logic_error("matmul: shape mismatch");
  Mat<T> C(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t k = 0; k < A.cols; ++k) {
      const T aik = A(i, k);
      const T* brow = B.row(k);
      T* crow = C.row(i);
      for (std::size_t j = 0; j < B.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return C;
}

// C = A (m x k) * B^T, with B stored as (n x k)
template <class T>
Mat<T> matmul_nt(const Mat<T>& A, const Mat<T>& B) {
  if (A.cols != B.cols) throw std::logic_error("matmul_nt: shape mismatch");
  Mat<T> C(A.rows, B.rows);
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t j = 0; j < B.rows; ++j) {
      T s{};
      const T* arow = A.row(i);
      const T* brow = B.row(j);
      for (std::size_t k = 0; k < A.cols; ++k) s += arow[k] * brow[k];
      C(i, j) = s;
    }
  }
  return C;
}

// C = A^T * B, with A stored as (k x m), B as (k x n)
template <class T>
Mat<T> matmul_tn(const Mat<T>& A, const Mat<T>& B) {
  if (A.rows != B.rows) throw std::logic_error("matmul_tn: shape mismatch");
  Mat<T> C(A.cols, B.cols);
  for (std::size_t k = 0; k < A.rows; ++k) {
    const T* arow = A.row(k);
    const T* brow = B.row(k);
    for (std::size_t i = 0; i < A.cols; ++i) {
      const T aki = arow[i];
      T* crow = C.row(i);
      for (std::size_t j = 0; j < B.cols; ++j) crow[j] += aki * brow[j];
    }
  }
  return C;
}

// C += A^T * B (accumulating variant for gradient sums)
template <class T>
void matmul_tn_acc(const Mat<T>& A, const Mat<T>& B, Mat<T>& C) {
  if (A.rows != B.rows || C.rows != A.cols || C.cols != B.cols)
    throw std::logic_error("matmul_tn_acc: shape mismatch");
  for (std::size_t k = 0; k < A.rows; ++k) {
    const T* arow = A.row(k);
    const T* brow = B.row(k);
    for (std::size_t i = 0; i < A.cols; ++i) {
      const T aki = arow[i];
      T* crow = C.row(i);
      for (std::size_t j = 0; j < B.cols; ++j) crow[j] += aki * brow[j];
    }
  }
}

template <class T>
void add_row_bias(Mat<T>& M, const std::vector<T>& b) {
  if (M.cols != b.size()) throw std::logic_error("add_row_bias: shape mismatch");
  for (std::size_t i = 0; i < M.rows; ++i) {
    T* r = M.row(i);
    for (std::size_t j = 0; j < M.cols; ++j) r[j] += b[j];
  }
}

template <class T>
void colsum_acc(const Mat<T>& M, std::vector<T>& out) {
  if (M.cols != out.size()) throw std::logic_error("colsum_acc: shape mismatch");
  for (std::size_t i = 0; i < M.rows; ++i) {
    const T* r = M.row(i);
    for (std::size_t j = 0; j < M.cols; ++j) out[j] += r[j];
  }
}

template <class T>
void add_inplace(Mat<T>& A, const Mat<T>& B) {
  if (A.rows != B.rows || A.cols != B.cols)
    throw std::logic_error("add_inplace: shape mismatch");
  for (std::size_t i = 0; i < A.a.size(); ++i) A.a[i] += B.a[i];
}

}  // namespace offlang
