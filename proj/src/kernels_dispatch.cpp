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
#include <cstdlib>
#include <string>

#include "convnarr/kernels.hpp"

namespace convnarr::kernels {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

Isa select_isa() {
  if (const char* env = std::getenv("CONVNARR_SIMD"); env && std::string(env) == "scalar") {
    return Isa::Scalar;
  }
  if (avx2_table() != nullptr && cpu_has_avx2()) return Isa::Avx2;
  return Isa::Scalar;
}

}  // namespace

Isa active_isa() {
  static const Isa isa = select_isa();
  return isa;
}

const KernelTable& active() {
  static const KernelTable& table = active_isa() == Isa::Avx2 ? *avx2_table() : scalar_table();
  return table;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Avx2:
      return "avx2";
    case Isa::Scalar:
      break;
  }
  return "scalar";
}

}  // namespace convnarr::kernels
