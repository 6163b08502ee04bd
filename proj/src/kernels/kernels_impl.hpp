// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "synqa/kernels.hpp"

namespace synqa::kernels {

namespace generic {
void score_logits(std::span<const double> q, std::span<const double> kt, std::size_t L,
                  std::size_t d, double scale, std::span<double> logits);
void logit_grad(std::span<const double> g, std::span<const double> q, std::span<const double> kt,
                std::size_t L, std::size_t d, double scale, std::span<double> dq,
                std::span<double> dk);
}  // namespace generic

#if defined(SYNQA_HAVE_AVX2)
namespace avx2 {
void score_logits(std::span<const double> q, std::span<const double> kt, std::size_t L,
                  std::size_t d, double scale, std::span<double> logits);
void logit_grad(std::span<const double> g, std::span<const double> q, std::span<const double> kt,
                std::size_t L, std::size_t d, double scale, std::span<double> dq,
                std::span<double> dk);
}  // namespace avx2
#endif

}  // namespace synqa::kernels
