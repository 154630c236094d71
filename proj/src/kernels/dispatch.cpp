// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the codial authors
#include <cstdlib>
#include <cstring>

#include "codial/kernels/api.hpp"

namespace codial::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels* choose_default() {
  const char* env = std::getenv("CODIAL_KERNELS");
  if (env != nullptr) {
    if (std::strcmp(env, "scalar") == 0) return &scalar_kernels();
    if (std::strcmp(env, "avx2") == 0 && avx2_available()) return &avx2_kernels();
  }
  return avx2_available() ? &avx2_kernels() : &scalar_kernels();
}

const Kernels*& active_slot() {
  static const Kernels* slot = choose_default();
  return slot;
}

}  // namespace

bool avx2_available() { return avx2_compiled() && cpu_has_avx2(); }

const Kernels& active() { return *active_slot(); }

void set_active(const Kernels& k) { active_slot() = &k; }

}  // namespace codial::kernels
