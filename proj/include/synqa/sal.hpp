// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "synqa/answers.hpp"
#include "synqa/backends.hpp"

// Self-attention labelling (SAL): a multi-label head that scores every
// candidate (start, end) token pair with sigmoid(q_start . k_end / sqrt(d_k)).

namespace synqa::sal {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  Matrix transposed() const;
};

/// Square boolean matrix over token pairs; true = admissible / positive.
struct SpanMask {
  std::size_t size = 0;
  std::vector<std::uint8_t> cells;

  SpanMask() = default;
  explicit SpanMask(std::size_t n, bool fill = false) : size(n), cells(n * n, fill ? 1 : 0) {}

  bool operator()(std::size_t i, std::size_t j) const { return cells[i * size + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v = true) { cells[i * size + j] = v ? 1 : 0; }
  std::size_t count() const;
};

struct Projections {
  Matrix q;  // L x d_k, start queries
  Matrix k;  // L x d_k, end keys

  std::size_t length() const { return q.rows; }
  std::size_t dim() const { return q.cols; }
};

struct CandidateScoreMatrix {
  std::size_t size = 0;
  std::vector<double> probs;  // L x L, read only where mask is set
  SpanMask mask;

  double operator()(std::size_t i, std::size_t j) const { return probs[i * size + j]; }
};

/// Token range [begin, end) occupied by the passage within the encoder input.
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Cell (i, j) is admissible iff i <= j, j - i + 1 <= max_answer_len and both
/// i and j lie in `passage`.
SpanMask sal_mask(std::size_t length, std::size_t max_answer_len, TokenRange passage);

CandidateScoreMatrix sal_forward(const Projections& proj, const SpanMask& mask);

/// Several heads combined by elementwise max over their probabilities.
CandidateScoreMatrix sal_forward(std::span<const Projections> heads, const SpanMask& mask);

/// (#admissible - #positive) / #positive, floored at 1 (1 when no positives).
double default_pos_weight(const SpanMask& mask, const SpanMask& gold);

/// Mean weighted binary cross-entropy over admissible cells. Positives are
/// weighted by `pos_weight`; masked cells contribute nothing. Probabilities are
/// clamped to [1e-15, 1 - 1e-15] before taking logs.
/// Throws std::invalid_argument if gold marks an inadmissible cell.
double sal_loss(const CandidateScoreMatrix& scores, const SpanMask& gold, double pos_weight);

struct LossAndGrad {
  double loss = 0.0;
  Matrix dq;
  Matrix dk;
};

/// Loss computed from logits (numerically stable) with its analytic gradient
/// with respect to the projections.
LossAndGrad sal_loss_and_grad(const Projections& proj, const SpanMask& mask, const SpanMask& gold,
                              double pos_weight);

struct DecodedCandidates {
  std::vector<AnswerCandidate> candidates;  // descending probability
  std::size_t unmappable = 0;               // spans dropped for bad token offsets
};

/// Admissible cells with probability >= threshold, as character spans.
/// Ties in probability go to the earlier start, then the shorter span.
DecodedCandidates decode_sal_candidates(const CandidateScoreMatrix& scores,
                                        std::span<const TokenOffset> token_to_char,
                                        double threshold, std::string_view passage_id,
                                        std::string_view passage_text);

constexpr double kDefaultThreshold = 0.5;

}  // namespace synqa::sal
