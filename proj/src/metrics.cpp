// SPDX-License-Identifier: Apache-2.0
#include "synqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "synqa/text.hpp"

namespace synqa::metrics {

namespace {

bool is_ascii_punct(char32_t cp) {
  return (cp >= 33 && cp <= 47) || (cp >= 58 && cp <= 64) || (cp >= 91 && cp <= 96) ||
         (cp >= 123 && cp <= 126);
}

// Mirrors re.sub(r'\b(a|an|the)\b', ' ', s) for Python str patterns.
std::u32string remove_articles(const std::u32string& s) {
  static const std::u32string kArticles[] = {U"a", U"an", U"the"};
  auto word_at = [&](std::size_t i) { return i < s.size() && text::is_py_word(s[i]); };
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const bool boundary_before = (i == 0 || !text::is_py_word(s[i - 1])) && word_at(i);
    bool matched = false;
    if (boundary_before) {
      for (const auto& art : kArticles) {
        if (s.compare(i, art.size(), art) != 0) continue;
        if (word_at(i + art.size())) continue;
        out.push_back(U' ');
        i += art.size();
        matched = true;
        break;
      }
    }
    if (!matched) out.push_back(s[i++]);
  }
  return out;
}

std::vector<std::string> normalized_tokens(std::string_view s) {
  return text::split_whitespace(normalize_answer(s));
}

double f1_single(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  std::unordered_map<std::string_view, long> counts;
  for (const auto& t : gold) ++counts[t];
  long same = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++same;
    }
  }
  if (same == 0) return 0.0;
  const double precision = static_cast<double>(same) / static_cast<double>(pred.size());
  const double recall = static_cast<double>(same) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

void require_golds(std::span<const std::string> golds) {
  if (golds.empty()) throw std::invalid_argument("at least one gold answer is required");
}

}  // namespace

std::string normalize_answer(std::string_view raw) {
  std::u32string lowered = text::py_lower(text::decode_utf8(raw));
  std::u32string no_punct;
  no_punct.reserve(lowered.size());
  for (char32_t cp : lowered)
    if (!is_ascii_punct(cp)) no_punct.push_back(cp);
  const std::string spaced = text::encode_utf8(remove_articles(no_punct));
  std::string out;
  for (const auto& piece : text::split_whitespace(spaced)) {
    if (!out.empty()) out.push_back(' ');
    out += piece;
  }
  return out;
}

int exact_match(std::string_view prediction, std::span<const std::string> golds) {
  require_golds(golds);
  const auto p = normalize_answer(prediction);
  return std::any_of(golds.begin(), golds.end(),
                     [&](const std::string& g) { return normalize_answer(g) == p; })
             ? 1
             : 0;
}

double token_f1(std::string_view prediction, std::span<const std::string> golds) {
  require_golds(golds);
  const auto pred = normalized_tokens(prediction);
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, f1_single(pred, normalized_tokens(g)));
  return best;
}

EmF1 dataset_em_f1(std::span<const ScoredPrediction> pairs) {
  if (pairs.empty()) throw std::invalid_argument("dataset_em_f1: no predictions");
  double em = 0.0;
  double f1 = 0.0;
  for (const auto& p : pairs) {
    em += exact_match(p.prediction, p.golds);
    f1 += token_f1(p.prediction, p.golds);
  }
  const auto n = static_cast<double>(pairs.size());
  return {100.0 * em / n, 100.0 * f1 / n};
}

SeedAggregate aggregate_seeds(std::span<const EmF1> runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate_seeds: no runs");
  SeedAggregate agg;
  const auto n = static_cast<double>(runs.size());
  for (const auto& r : runs) {
    agg.mean.em_pct += r.em_pct / n;
    agg.mean.f1_pct += r.f1_pct / n;
  }
  if (runs.size() > 1) {
    double em_ss = 0.0;
    double f1_ss = 0.0;
    for (const auto& r : runs) {
      em_ss += (r.em_pct - agg.mean.em_pct) * (r.em_pct - agg.mean.em_pct);
      f1_ss += (r.f1_pct - agg.mean.f1_pct) * (r.f1_pct - agg.mean.f1_pct);
    }
    agg.stddev.em_pct = std::sqrt(em_ss / (n - 1.0));
    agg.stddev.f1_pct = std::sqrt(f1_ss / (n - 1.0));
  }
  return agg;
}

namespace {

struct Tally {
  long examples = 0;
  long errors = 0;
};

// Failed records are never counted.
void tally(const AnnotationRecord& r, VmerMode mode, Tally& t) {
  if (r.failed) return;
  if (!r.fooled) {
    ++t.examples;
    return;
  }
  switch (r.validation) {
    case Validation::valid:
      ++t.examples;
      ++t.errors;
      break;
    case Validation::invalid:
      if (mode == VmerMode::inclusive) ++t.examples;
      break;
    case Validation::pending:
      throw std::invalid_argument("record " + r.record_id + " is still pending validation");
    case Validation::auto_valid:
      throw std::logic_error("record " + r.record_id + ": fooled record cannot be auto_valid");
  }
}

}  // namespace

double vmer(std::span<const AnnotationRecord> records, VmerMode mode) {
  Tally t;
  for (const auto& r : records) tally(r, mode, t);
  if (t.examples == 0) return 0.0;
  return 100.0 * static_cast<double>(t.errors) / static_cast<double>(t.examples);
}

std::vector<AnnotatorStats> annotator_stats(std::span<const AnnotationRecord> records,
                                            VmerMode mode) {
  std::map<std::string, Tally> per;
  for (const auto& r : records) tally(r, mode, per[r.annotator_id]);
  std::vector<AnnotatorStats> out;
  for (const auto& [id, t] : per)
    if (t.examples > 0) out.push_back({id, t.examples, t.errors});
  return out;
}

double mvmer(std::span<const AnnotatorStats> stats) {
  if (stats.empty()) throw std::invalid_argument("mvmer: no annotators");
  double sum = 0.0;
  for (const auto& s : stats) {
    if (s.n_examples < 1 || s.n_validated_errors < 0 || s.n_validated_errors > s.n_examples)
      throw std::invalid_argument("annotator " + s.annotator_id + ": inconsistent counts");
    sum += static_cast<double>(s.n_validated_errors) / static_cast<double>(s.n_examples);
  }
  return 100.0 * sum / static_cast<double>(stats.size());
}

double vmer_from_stats(std::span<const AnnotatorStats> stats) {
  long examples = 0;
  long errors = 0;
  for (const auto& s : stats) {
    examples += s.n_examples;
    errors += s.n_validated_errors;
  }
  return examples == 0 ? 0.0 : 100.0 * static_cast<double>(errors) / static_cast<double>(examples);
}

}  // namespace synqa::metrics
