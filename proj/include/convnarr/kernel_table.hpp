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
#ifndef CONVNARR_KERNEL_TABLE_HPP
#define CONVNARR_KERNEL_TABLE_HPP

#include <cstddef>

// Function-pointer table shared by the scalar and ISA-specific translation
// units. Kept free of inline code: the AVX2 unit is compiled with -mavx2 and
// must not emit COMDAT definitions that other units could pick up.

namespace convnarr::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y += W x, W is rows x cols
  void (*gemv)(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols);
  // y += W^T x, W is rows x cols, x has rows entries, y has cols entries
  void (*gemv_t)(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols);
  // W += x y^T, x has rows entries, y has cols entries
  void (*ger)(const double* x, const double* y, double* w, std::size_t rows, std::size_t cols);
};

const KernelTable& scalar_table();
// Returns nullptr when the binary was built without AVX2 support.
const KernelTable* avx2_table();

}  // namespace convnarr::kernels

#endif  // CONVNARR_KERNEL_TABLE_HPP
