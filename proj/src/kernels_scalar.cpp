/*******************************************************************************
 * Copyright 2026 The convnarr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *******************************************************************************/
#include "convnarr/kernels.hpp"

namespace convnarr::kernels {
namespace {

double dot_ref(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_ref(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_ref(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] += dot_ref(w + r * cols, x, cols);
}

void gemv_t_ref(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_ref(x[r], w + r * cols, y, cols);
}

void ger_ref(const double* x, const double* y, double* w, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_ref(x[r], y, w + r * cols, cols);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{dot_ref, axpy_ref, gemv_ref, gemv_t_ref, ger_ref};
  return table;
}

}  // namespace convnarr::kernels
