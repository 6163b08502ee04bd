// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "synqa/backends.hpp"

// Deterministic, dependency-free backends. They let the whole pipeline run
// end to end on a laptop and in tests; none of them is a real model.

namespace synqa::stubs {

/// Heuristic tagger: digits are NUM, capitalised words PROPN, a handful of
/// suffixes ADJ, everything else NOUN or PUNCT. Entities are runs of PROPN or
/// NUM tokens, noun chunks are ADJ* (NOUN|PROPN)+ runs, clauses are the
/// stretches between , ; : . ! ?
class RuleAnnotator final : public LinguisticAnnotator {
 public:
  LinguisticAnnotation annotate(const Passage& passage) override;
};

/// Start/end distributions that favour capitalised and numeric tokens.
class ToySpanPredictor final : public SpanPredictor {
 public:
  SpanDistribution predict(std::string_view context, std::string_view question) override;
};

/// Cloze-style questions: `What comes after "<cue>"?` where the cue is the
/// words immediately preceding the answer. Beam variants differ in cue length.
class TemplateGenerator final : public SequenceGenerator {
 public:
  std::vector<GeneratedSequence> generate(std::string_view prompt,
                                          const DecodeConfig& config) override;
};

/// Reads the quoted cue from a template question, finds it in the passage
/// and answers with the following tokens. `variant` sets how many tokens it
/// is willing to read, so ensemble members disagree on long answers.
class ToyQaModel final : public QaModel {
 public:
  explicit ToyQaModel(int variant) : variant_(variant) {}
  QaPrediction answer(std::string_view context, std::string_view question) override;
  int max_tokens() const;

 private:
  int variant_;
};

std::vector<std::unique_ptr<QaModel>> make_toy_ensemble(int n_members);

}  // namespace synqa::stubs
