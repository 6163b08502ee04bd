// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "synqa/backends.hpp"
#include "synqa/span.hpp"

namespace synqa {

enum class ExampleState { raw, kept, relabelled, discarded };

std::string_view to_string(ExampleState s);
ExampleState parse_example_state(std::string_view s);

struct SyntheticExample {
  std::string id;
  std::string passage_id;
  AnswerSpan answer;
  std::string question;
  double answer_confidence = 1.0;
  double gen_score = 1.0;
  std::string config_id;
  ExampleState state = ExampleState::raw;
  std::optional<AnswerSpan> final_answer;
};

/// Throws std::logic_error when state and final_answer disagree.
void check_invariants(const SyntheticExample& ex);

struct EnsembleVerdict {
  std::string example_id;
  std::vector<QaPrediction> predictions;  // one per member, member order
  int n_members = 0;
  int n_correct = 0;
  std::vector<std::string> diagnostics;  // member failures
};

struct FilterConfig {
  double answer_conf_thresh = 0.5;
  double gen_conf_thresh = 0.3;
  int roundtrip_min_correct = 6;
  int selftrain_keep_at = 5;
  int selftrain_relabel_at = 2;
  int n_members = 6;

  void validate() const;
};

namespace filters {

struct Partition {
  std::vector<SyntheticExample> kept;
  std::vector<SyntheticExample> dropped;
};

/// Keeps examples with answer_confidence >= thresh.
Partition filter_by_answer_confidence(std::span<const SyntheticExample> examples, double thresh);
/// Keeps examples with gen_score >= thresh.
Partition filter_by_generator_confidence(std::span<const SyntheticExample> examples, double thresh);

/// Asks every member the example's question; a member is correct when its
/// answer matches the prompted answer after SQuAD normalization. Member
/// exceptions count as incorrect and are recorded in `diagnostics`.
EnsembleVerdict roundtrip_verdict(const SyntheticExample& example, std::string_view passage_text,
                                  std::span<QaModel* const> ensemble);

/// Ids of verdicts with n_correct >= min_correct, in input order.
std::vector<std::string> filter_roundtrip(std::span<const EnsembleVerdict> verdicts,
                                          int min_correct);

struct RelabelDecision {
  ExampleState state = ExampleState::discarded;
  std::optional<std::string> answer;  // surface text of the agreed answer
  int agreement = 0;                  // size of the winning agreement group
};

/// Self-training vote. Predictions are grouped by normalized text (empty
/// answers never form a group). The largest group wins; a tie between
/// largest groups goes to the higher summed member confidence, and an exact
/// tie discards. With m members agreeing on a*: m >= keep_at keeps a*;
/// m >= relabel_at relabels to a* (or keeps, if a* is the prompted answer);
/// otherwise discard.
RelabelDecision self_train_relabel(const EnsembleVerdict& verdict, std::string_view prompted_answer,
                                   int keep_at = 5, int relabel_at = 2);

/// Applies a relabel decision to an example. A new answer must occur verbatim
/// in the passage (first occurrence wins), otherwise the example is discarded.
SyntheticExample apply_relabel(const SyntheticExample& example, const RelabelDecision& decision,
                               std::string_view passage_text);

struct StageCounts {
  std::string name;
  std::size_t input = 0;
  std::size_t kept = 0;
  std::size_t relabelled = 0;
  std::size_t discarded = 0;
};

struct FilterResult {
  std::vector<SyntheticExample> examples;  // kept or relabelled, final_answer set
  std::vector<StageCounts> stages;
};

/// Answer-confidence filter followed by self-training on the survivors.
/// Throws std::invalid_argument when a survivor has no verdict or passage.
FilterResult combined_filter(std::span<const SyntheticExample> examples,
                             const std::map<std::string, EnsembleVerdict>& verdicts,
                             const std::map<std::string, std::string>& passage_texts,
                             const FilterConfig& config);

/// Self-training alone (no confidence pre-filter).
FilterResult self_training_filter(std::span<const SyntheticExample> examples,
                                  const std::map<std::string, EnsembleVerdict>& verdicts,
                                  const std::map<std::string, std::string>& passage_texts,
                                  const FilterConfig& config);

// --- influence estimation ---------------------------------------------------

enum class HessianMode { identity, lissa };

/// Approximates H^-1 v.
using InverseHvp = std::function<std::vector<double>(std::span<const double>)>;

/// Estimated effect of up-weighting a training example on validation loss:
/// -<train_grad, H^-1 mean(val_grads)>. Positive = harmful. Identity mode takes
/// H = I; lissa mode requires `inverse_hvp`.
double influence_score(std::span<const double> train_grad,
                       const std::vector<std::vector<double>>& val_grads,
                       HessianMode mode = HessianMode::identity,
                       const InverseHvp& inverse_hvp = {});

/// Hessian-vector product oracle supplied by the model backend.
using Hvp = std::function<std::vector<double>(std::span<const double>)>;

/// LiSSA recursion h <- v + (1 - damping) h - Hvp(h) / scale, repeated
/// `iterations` times; returns h / scale.
std::vector<double> lissa_inverse_hvp(const Hvp& hvp, std::span<const double> v, double damping,
                                      double scale, int iterations);

/// Keeps examples whose influence score is <= 0.
Partition filter_by_influence(std::span<const SyntheticExample> examples,
                              const std::map<std::string, double>& scores);

}  // namespace filters
}  // namespace synqa
