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
#ifndef CONVNARR_KERNELS_HPP
#define CONVNARR_KERNELS_HPP

#include <cstddef>
#include <span>
#include <string_view>

#include "convnarr/kernel_table.hpp"

// Dense double-precision kernels used by the HAN inner loops.
//
// Each kernel has a scalar reference implementation and an AVX2+FMA variant.
// The variant is chosen once at startup from CPUID; setting the environment
// variable CONVNARR_SIMD=scalar forces the reference path. Matrices are
// row-major with an explicit row count; `cols` is implied by the span sizes.

namespace convnarr::kernels {

bool cpu_has_avx2();

// The active table: AVX2 when compiled in and supported by the CPU, unless
// overridden by CONVNARR_SIMD=scalar.
const KernelTable& active();
Isa active_isa();
std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void gemv(std::span<const double> w, std::span<const double> x, std::span<double> y) {
  active().gemv(w.data(), x.data(), y.data(), y.size(), x.size());
}
inline void gemv_t(std::span<const double> w, std::span<const double> x, std::span<double> y) {
  active().gemv_t(w.data(), x.data(), y.data(), x.size(), y.size());
}
inline void ger(std::span<const double> x, std::span<const double> y, std::span<double> w) {
  active().ger(x.data(), y.data(), w.data(), x.size(), y.size());
}

}  // namespace convnarr::kernels

#endif  // CONVNARR_KERNELS_HPP
