// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense inner loops of the span-labelling head. Every kernel has a portable
// scalar reference; wider variants are picked at runtime from the CPU's
// feature set and must agree with the reference (see tests/unit/kernels_test).
//
// Layouts (row-major):
//   q   L x d     start-query projections
//   kt  d x L     end-key projections, transposed
//   g   L x L     dLoss/dlogit per cell (zero on masked cells)
//   dq  L x d,  dk  L x d

namespace synqa::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);

struct SalKernels {
  Isa isa;
  /// logits[i*L + j] = scale * sum_k q[i*d + k] * kt[k*L + j]
  void (*score_logits)(std::span<const double> q, std::span<const double> kt, std::size_t L,
                       std::size_t d, double scale, std::span<double> logits);
  /// dq[i*d + k] = scale * sum_j g[i*L + j] * kt[k*L + j]
  /// dk[j*d + k] = scale * sum_i g[i*L + j] * q[i*d + k]
  void (*logit_grad)(std::span<const double> g, std::span<const double> q,
                     std::span<const double> kt, std::size_t L, std::size_t d, double scale,
                     std::span<double> dq, std::span<double> dk);
};

const SalKernels& scalar_kernels();
/// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const SalKernels* avx2_kernels();

/// Kernels selected for this process. Defaults to the widest supported ISA;
/// the SYNQA_ISA environment variable ("scalar", "avx2") pins a choice.
const SalKernels& active_kernels();

/// Overrides the selection (tests, benchmarks). Returns false if unsupported.
bool select_isa(Isa isa);

}  // namespace synqa::kernels
