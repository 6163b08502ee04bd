// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synqa/annotation.hpp"

namespace synqa::metrics {

/// SQuAD v1.1 answer normalization: lowercase, strip ASCII punctuation,
/// drop the articles a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view text);

int exact_match(std::string_view prediction, std::span<const std::string> golds);
double token_f1(std::string_view prediction, std::span<const std::string> golds);

inline int exact_match(std::string_view prediction, const std::string& gold) {
  return exact_match(prediction, std::span<const std::string>(&gold, 1));
}
inline double token_f1(std::string_view prediction, const std::string& gold) {
  return token_f1(prediction, std::span<const std::string>(&gold, 1));
}

struct ScoredPrediction {
  std::string prediction;
  std::vector<std::string> golds;
};

struct EmF1 {
  double em_pct = 0.0;
  double f1_pct = 0.0;
};

EmF1 dataset_em_f1(std::span<const ScoredPrediction> pairs);

struct SeedAggregate {
  EmF1 mean;
  EmF1 stddev;  // sample standard deviation, 0 for a single run
};

SeedAggregate aggregate_seeds(std::span<const EmF1> runs);

// --- adversarial human evaluation -----------------------------------------

enum class VmerMode {
  strict,     // invalid fooling attempts leave numerator and denominator
  inclusive,  // invalid fooling attempts stay in the denominator
};

struct AnnotatorStats {
  std::string annotator_id;
  long n_examples = 0;
  long n_validated_errors = 0;
};

/// Validated model error rate, in percent. Throws std::invalid_argument when
/// any counted fooling record is still pending validation.
double vmer(std::span<const AnnotationRecord> records, VmerMode mode = VmerMode::strict);

/// Per-annotator counts under `mode`, sorted by annotator id. Annotators with
/// no countable example are omitted.
std::vector<AnnotatorStats> annotator_stats(std::span<const AnnotationRecord> records,
                                            VmerMode mode = VmerMode::strict);

/// Macro-average of per-annotator error rates, in percent.
double mvmer(std::span<const AnnotatorStats> stats);

/// Micro-average over pooled annotator counts; equals vmer() on the same log.
double vmer_from_stats(std::span<const AnnotatorStats> stats);

}  // namespace synqa::metrics
