// SPDX-License-Identifier: Apache-2.0
#include "kernels_impl.hpp"

namespace synqa::kernels::generic {

void score_logits(std::span<const double> q, std::span<const double> kt, std::size_t L,
                  std::size_t d, double scale, std::span<double> logits) {
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += q[i * d + k] * kt[k * L + j];
      logits[i * L + j] = acc * scale;
    }
  }
}

void logit_grad(std::span<const double> g, std::span<const double> q, std::span<const double> kt,
                std::size_t L, std::size_t d, double scale, std::span<double> dq,
                std::span<double> dk) {
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < L; ++j) acc += g[i * L + j] * kt[k * L + j];
      dq[i * d + k] = acc * scale;
    }
  }
  for (std::size_t j = 0; j < L; ++j) {
    for (std::size_t k = 0; k < d; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < L; ++i) acc += g[i * L + j] * q[i * d + k];
      dk[j * d + k] = acc * scale;
    }
  }
}

}  // namespace synqa::kernels::generic
