// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "synqa/backends.hpp"
#include "synqa/corpus.hpp"
#include "synqa/span.hpp"

namespace synqa {

enum class SelectionMethod {
  pos_extended,
  noun_chunks,
  named_entities,
  span_extraction,
  generative,
  sal,
};

std::string_view to_string(SelectionMethod m);
SelectionMethod parse_selection_method(std::string_view s);

struct AnswerCandidate {
  AnswerSpan span;
  double confidence = 1.0;  // methods without calibrated scores report 1.0
  SelectionMethod method = SelectionMethod::sal;
};

/// All annotated answers for one passage, deduplicated by offsets. When two
/// datasets contribute the same offsets the first one seen is kept.
struct AlignedAnswerSet {
  Passage passage;
  std::vector<AnswerSpan> answers;  // sorted by (char_start, char_end)
};

/// Answers one dataset contributes, keyed by passage id.
struct AnswerDataset {
  SourceDataset source = SourceDataset::squad;
  std::map<std::string, std::vector<AnswerSpan>> answers;
};

/// Merges the datasets' answers per passage and groups passages by their
/// split. Throws std::invalid_argument for answers naming an unknown passage
/// or whose text does not match the passage slice.
std::map<Split, std::vector<AlignedAnswerSet>> align_answer_sets(
    const std::vector<AnswerDataset>& datasets, const std::map<std::string, Passage>& passages);

struct OverlapStats {
  double answers_per_passage = 0.0;
  double pct_overlapping_answers = 0.0;
  double pct_passages_with_overlap = 0.0;
};

OverlapStats overlap_stats(const std::vector<AlignedAnswerSet>& sets);

/// Noun-chunk, named-entity, or extended part-of-speech candidates. The
/// extended mode is the deduplicated union of entities, adjectives, noun
/// chunks, numbers, distinct proper nouns, and clauses.
std::vector<AnswerCandidate> select_linguistic_candidates(const Passage& passage,
                                                          LinguisticAnnotator& annotator,
                                                          SelectionMethod mode);

constexpr std::size_t kDefaultMaxAnswerTokens = 30;

/// Top-k spans of a passage-only extractive model ranked by
/// p_start(i) * p_end(j). Ties go to the earlier start, then the shorter span.
/// Confidence is the joint score renormalized over all admissible spans.
std::vector<AnswerCandidate> select_span_extraction_candidates(
    const Passage& passage, SpanPredictor& predictor, std::size_t k,
    std::size_t max_answer_tokens = kDefaultMaxAnswerTokens);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Entity-level scores over unique normalized answer strings.
PrecisionRecall evaluate_candidates(const std::vector<std::string>& predicted,
                                    const std::vector<std::string>& gold);

}  // namespace synqa
