// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "synqa/metrics.hpp"

namespace oracle {

using synqa::sal::Projections;
using synqa::sal::SpanMask;

std::vector<double> sal_probs(const Projections& p, const SpanMask& mask) {
  const std::size_t L = p.q.rows, d = p.q.cols;
  std::vector<double> out(L * L, 0.0);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) {
      if (!mask(i, j)) continue;
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += p.q(i, k) * p.k(j, k);
      out[i * L + j] = 1.0 / (1.0 + std::exp(-dot / std::sqrt(static_cast<double>(d))));
    }
  return out;
}

bool admissible(std::size_t i, std::size_t j, std::size_t max_len, std::size_t begin,
                std::size_t end) {
  const bool ordered = i <= j;
  const bool short_enough = ordered && j - i + 1 <= max_len;
  const bool inside = i >= begin && i < end && j >= begin && j < end;
  return ordered && short_enough && inside;
}

Gradient finite_difference_grad(const Projections& p, const SpanMask& mask, const SpanMask& gold,
                                double pos_weight, double h) {
  auto loss = [&](const Projections& x) {
    return synqa::sal::sal_loss(synqa::sal::sal_forward(x, mask), gold, pos_weight);
  };
  Gradient g;
  for (int which = 0; which < 2; ++which) {
    const std::size_t n = which == 0 ? p.q.data.size() : p.k.data.size();
    auto& out = which == 0 ? g.dq : g.dk;
    for (std::size_t c = 0; c < n; ++c) {
      Projections plus = p, minus = p;
      (which == 0 ? plus.q : plus.k).data[c] += h;
      (which == 0 ? minus.q : minus.k).data[c] -= h;
      out.push_back((loss(plus) - loss(minus)) / (2.0 * h));
    }
  }
  return g;
}

RelabelOutcome self_train(const std::vector<synqa::QaPrediction>& preds, const std::string& prompted,
                          int keep_at, int relabel_at) {
  const std::size_t n = preds.size();
  std::vector<std::string> norm(n);
  for (std::size_t i = 0; i < n; ++i) norm[i] = synqa::metrics::normalize_answer(preds[i].text);

  // agreement[i] = members (including i) whose normalized answer equals i's
  std::vector<int> agreement(n, 0);
  int m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (norm[i].empty()) continue;
    for (std::size_t j = 0; j < n; ++j) agreement[i] += norm[j] == norm[i] ? 1 : 0;
    m = std::max(m, agreement[i]);
  }
  RelabelOutcome out;
  if (m == 0) return out;

  // every distinct answer with the largest agreement, with its summed confidence
  std::vector<std::pair<std::string, double>> leaders;
  for (std::size_t i = 0; i < n; ++i) {
    if (norm[i].empty() || agreement[i] != m) continue;
    bool seen = false;
    for (const auto& l : leaders) seen = seen || l.first == norm[i];
    if (seen) continue;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (norm[j] == norm[i]) sum += preds[j].confidence;
    leaders.emplace_back(norm[i], sum);
  }
  double top = leaders[0].second;
  for (const auto& l : leaders) top = std::max(top, l.second);
  int at_top = 0;
  std::string winner;
  for (const auto& l : leaders)
    if (l.second == top) {
      ++at_top;
      winner = l.first;
    }
  if (at_top > 1) return out;

  // surface form: highest-confidence member of the winning group, earliest on ties
  std::size_t best = n;
  for (std::size_t i = 0; i < n; ++i)
    if (norm[i] == winner && (best == n || preds[i].confidence > preds[best].confidence)) best = i;

  if (m >= keep_at) {
    out.state = synqa::ExampleState::kept;
  } else if (m >= relabel_at) {
    out.state = winner == synqa::metrics::normalize_answer(prompted) ? synqa::ExampleState::kept
                                                                     : synqa::ExampleState::relabelled;
  } else {
    return out;
  }
  out.answer = preds[best].text;
  return out;
}

bool shares_window(const std::vector<std::string>& a, const std::vector<std::string>& b, int n) {
  const auto w = static_cast<std::size_t>(n);
  if (a.size() < w || b.size() < w) return false;
  for (std::size_t i = 0; i + w <= a.size(); ++i)
    for (std::size_t j = 0; j + w <= b.size(); ++j) {
      bool same = true;
      for (std::size_t k = 0; k < w && same; ++k) same = a[i + k] == b[j + k];
      if (same) return true;
    }
  return false;
}

double vmer_percent(const std::vector<synqa::AnnotationRecord>& records, bool strict) {
  long num = 0, den = 0;
  for (const auto& r : records) {
    if (r.failed) continue;
    if (!r.fooled) {
      ++den;
    } else if (r.validation == synqa::Validation::valid) {
      ++num;
      ++den;
    } else if (r.validation == synqa::Validation::invalid && !strict) {
      ++den;
    }
  }
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::filesystem::path temp_dir(const std::string& tag) {
  static int counter = 0;
  auto p = std::filesystem::temp_directory_path() /
           ("synqa-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace oracle
