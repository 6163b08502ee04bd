// SPDX-License-Identifier: Apache-2.0
// Compiled with -mavx2 only; no FMA so products and sums round exactly like
// the scalar reference.
#include "kernels_impl.hpp"

#include <immintrin.h>

namespace synqa::kernels::avx2 {

void score_logits(std::span<const double> q, std::span<const double> kt, std::size_t L,
                  std::size_t d, double scale, std::span<double> logits) {
  const __m256d vscale = _mm256_set1_pd(scale);
  for (std::size_t i = 0; i < L; ++i) {
    const double* qi = q.data() + i * d;
    double* out = logits.data() + i * L;
    std::size_t j = 0;
    // Lanes run over end tokens j; the k loop keeps the reference summation order.
    for (; j + 4 <= L; j += 4) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t k = 0; k < d; ++k) {
        const __m256d kv = _mm256_loadu_pd(kt.data() + k * L + j);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(qi[k]), kv));
      }
      _mm256_storeu_pd(out + j, _mm256_mul_pd(acc, vscale));
    }
    for (; j < L; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += qi[k] * kt[k * L + j];
      out[j] = acc * scale;
    }
  }
}

namespace {

double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void logit_grad(std::span<const double> g, std::span<const double> q, std::span<const double> kt,
                std::size_t L, std::size_t d, double scale, std::span<double> dq,
                std::span<double> dk) {
  // dq: row i of g against row k of kt, both contiguous over j.
  for (std::size_t i = 0; i < L; ++i) {
    const double* gi = g.data() + i * L;
    for (std::size_t k = 0; k < d; ++k) {
      const double* kk = kt.data() + k * L;
      __m256d acc = _mm256_setzero_pd();
      std::size_t j = 0;
      for (; j + 4 <= L; j += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(gi + j), _mm256_loadu_pd(kk + j)));
      double sum = hsum(acc);
      for (; j < L; ++j) sum += gi[j] * kk[j];
      dq[i * d + k] = sum * scale;
    }
  }
  // dk: accumulate g rows scaled by q[i,k] into lanes over j, then transpose out.
  for (std::size_t k = 0; k < d; ++k) {
    std::size_t j = 0;
    for (; j + 4 <= L; j += 4) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t i = 0; i < L; ++i)
        acc = _mm256_add_pd(
            acc, _mm256_mul_pd(_mm256_loadu_pd(g.data() + i * L + j), _mm256_set1_pd(q[i * d + k])));
      alignas(32) double lanes[4];
      _mm256_store_pd(lanes, _mm256_mul_pd(acc, _mm256_set1_pd(scale)));
      for (int l = 0; l < 4; ++l) dk[(j + l) * d + k] = lanes[l];
    }
    for (; j < L; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < L; ++i) acc += g[i * L + j] * q[i * d + k];
      dk[j * d + k] = acc * scale;
    }
  }
}

}  // namespace synqa::kernels::avx2
