// SPDX-License-Identifier: Apache-2.0
#include "synqa/sal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "synqa/kernels.hpp"
#include "synqa/text.hpp"

namespace synqa::sal {

Matrix Matrix::transposed() const {
  Matrix t(cols, rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) t(c, r) = (*this)(r, c);
  return t;
}

std::size_t SpanMask::count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

SpanMask sal_mask(std::size_t length, std::size_t max_answer_len, TokenRange passage) {
  if (max_answer_len < 1) throw std::invalid_argument("sal_mask: max_answer_len must be >= 1");
  if (passage.begin > passage.end || passage.end > length)
    throw std::invalid_argument("sal_mask: passage token range [" + std::to_string(passage.begin) +
                                ", " + std::to_string(passage.end) + ") invalid for length " +
                                std::to_string(length));
  SpanMask mask(length);
  for (std::size_t i = passage.begin; i < passage.end; ++i)
    for (std::size_t j = i; j < passage.end && j - i + 1 <= max_answer_len; ++j) mask.set(i, j);
  return mask;
}

namespace {

void check_shapes(const Projections& proj, const SpanMask& mask) {
  if (proj.q.rows != proj.k.rows || proj.q.cols != proj.k.cols)
    throw std::invalid_argument("SAL projections: Q and K shapes differ");
  if (proj.q.cols < 1) throw std::invalid_argument("SAL projections: d_k must be >= 1");
  if (mask.size != proj.q.rows)
    throw std::invalid_argument("SAL projections: mask size " + std::to_string(mask.size) +
                                " does not match sequence length " + std::to_string(proj.q.rows));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) and log(1 - sigmoid(x)) without cancellation.
double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
double log_one_minus_sigmoid(double x) { return log_sigmoid(-x); }

std::vector<double> logits_of(const Projections& proj) {
  const auto L = proj.length();
  const auto d = proj.dim();
  const Matrix kt = proj.k.transposed();
  std::vector<double> logits(L * L);
  kernels::active_kernels().score_logits(proj.q.data, kt.data, L, d,
                                         1.0 / std::sqrt(static_cast<double>(d)), logits);
  return logits;
}

void check_gold(const SpanMask& mask, const SpanMask& gold) {
  if (gold.size != mask.size) throw std::invalid_argument("SAL gold/mask size mismatch");
  for (std::size_t c = 0; c < gold.cells.size(); ++c)
    if (gold.cells[c] && !mask.cells[c])
      throw std::invalid_argument("SAL gold marks inadmissible cell (" +
                                  std::to_string(c / mask.size) + ", " +
                                  std::to_string(c % mask.size) + ") as positive");
}

}  // namespace

CandidateScoreMatrix sal_forward(const Projections& proj, const SpanMask& mask) {
  check_shapes(proj, mask);
  CandidateScoreMatrix out;
  out.size = proj.length();
  out.probs = logits_of(proj);
  for (double& p : out.probs) p = sigmoid(p);
  out.mask = mask;
  return out;
}

CandidateScoreMatrix sal_forward(std::span<const Projections> heads, const SpanMask& mask) {
  if (heads.empty()) throw std::invalid_argument("sal_forward: no heads");
  CandidateScoreMatrix out = sal_forward(heads.front(), mask);
  for (const auto& head : heads.subspan(1)) {
    const auto other = sal_forward(head, mask);
    for (std::size_t c = 0; c < out.probs.size(); ++c)
      out.probs[c] = std::max(out.probs[c], other.probs[c]);
  }
  return out;
}

double default_pos_weight(const SpanMask& mask, const SpanMask& gold) {
  const auto admissible = static_cast<double>(mask.count());
  std::size_t pos = 0;
  for (std::size_t c = 0; c < gold.cells.size(); ++c) pos += (gold.cells[c] && mask.cells[c]) ? 1 : 0;
  if (pos == 0) return 1.0;
  return std::max(1.0, (admissible - static_cast<double>(pos)) / static_cast<double>(pos));
}

double sal_loss(const CandidateScoreMatrix& scores, const SpanMask& gold, double pos_weight) {
  if (!(pos_weight > 0.0)) throw std::invalid_argument("sal_loss: pos_weight must be > 0");
  check_gold(scores.mask, gold);
  constexpr double kEps = 1e-15;
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < scores.probs.size(); ++c) {
    if (!scores.mask.cells[c]) continue;
    const double p = std::clamp(scores.probs[c], kEps, 1.0 - kEps);
    total += gold.cells[c] ? -pos_weight * std::log(p) : -std::log1p(-p);
    ++n;
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

LossAndGrad sal_loss_and_grad(const Projections& proj, const SpanMask& mask, const SpanMask& gold,
                              double pos_weight) {
  check_shapes(proj, mask);
  check_gold(mask, gold);
  if (!(pos_weight > 0.0)) throw std::invalid_argument("sal_loss: pos_weight must be > 0");
  const auto L = proj.length();
  const auto d = proj.dim();
  const auto logits = logits_of(proj);
  const std::size_t n = mask.count();

  LossAndGrad out{0.0, Matrix(L, d), Matrix(L, d)};
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> g(L * L, 0.0);
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (!mask.cells[c]) continue;
    const double x = logits[c];
    if (gold.cells[c]) {
      out.loss -= pos_weight * log_sigmoid(x);
      g[c] = -pos_weight * (1.0 - sigmoid(x)) * inv_n;
    } else {
      out.loss -= log_one_minus_sigmoid(x);
      g[c] = sigmoid(x) * inv_n;
    }
  }
  out.loss *= inv_n;
  const Matrix kt = proj.k.transposed();
  kernels::active_kernels().logit_grad(g, proj.q.data, kt.data, L, d,
                                       1.0 / std::sqrt(static_cast<double>(d)), out.dq.data,
                                       out.dk.data);
  return out;
}

DecodedCandidates decode_sal_candidates(const CandidateScoreMatrix& scores,
                                        std::span<const TokenOffset> token_to_char,
                                        double threshold, std::string_view passage_id,
                                        std::string_view passage_text) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("decode_sal_candidates: threshold must lie in (0, 1)");
  struct Cell {
    double p;
    std::size_t i;
    std::size_t j;
  };
  std::vector<Cell> cells;
  const auto L = scores.size;
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j)
      if (scores.mask(i, j) && scores(i, j) >= threshold) cells.push_back({scores(i, j), i, j});
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    if (a.p != b.p) return a.p > b.p;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });

  DecodedCandidates out;
  const auto text_len = text::length(passage_text);
  for (const auto& c : cells) {
    if (c.j >= token_to_char.size()) {
      ++out.unmappable;
      continue;
    }
    const auto cs = token_to_char[c.i].char_start;
    const auto ce = token_to_char[c.j].char_end;
    if (cs >= ce || ce > text_len) {
      ++out.unmappable;
      continue;
    }
    out.candidates.push_back(
        {make_span(passage_id, passage_text, cs, ce), c.p, SelectionMethod::sal});
  }
  return out;
}

}  // namespace synqa::sal
