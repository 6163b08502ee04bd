// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"

namespace synqa::kernels {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "scalar";
}

const SalKernels& scalar_kernels() {
  static constexpr SalKernels k{Isa::scalar, &generic::score_logits, &generic::logit_grad};
  return k;
}

const SalKernels* avx2_kernels() {
#if defined(SYNQA_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  static constexpr SalKernels k{Isa::avx2, &avx2::score_logits, &avx2::logit_grad};
  return supported ? &k : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const SalKernels* initial_selection() {
  if (const char* env = std::getenv("SYNQA_ISA")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_kernels();
    if (want == "avx2" && avx2_kernels()) return avx2_kernels();
  }
  if (const auto* k = avx2_kernels()) return k;
  return &scalar_kernels();
}

std::atomic<const SalKernels*>& selection() {
  static std::atomic<const SalKernels*> current{initial_selection()};
  return current;
}

}  // namespace

const SalKernels& active_kernels() { return *selection().load(std::memory_order_acquire); }

bool select_isa(Isa isa) {
  const SalKernels* k = isa == Isa::scalar ? &scalar_kernels() : avx2_kernels();
  if (k == nullptr) return false;
  selection().store(k, std::memory_order_release);
  return true;
}

}  // namespace synqa::kernels
