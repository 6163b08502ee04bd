// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Contracts for the model components that live outside this library. Any
// provider (a served transformer, a precomputed file, a test stub) can be
// plugged in behind them.

namespace synqa {

struct Passage;
struct DecodeConfig;

/// Token with its code-point span in the source text.
struct TokenOffset {
  std::size_t char_start = 0;
  std::size_t char_end = 0;
};

/// Labelled code-point spans produced by a linguistic annotator.
struct LabelledSpan {
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string label;
};

struct LinguisticAnnotation {
  std::vector<LabelledSpan> tokens;       // label = universal POS tag (ADJ, NUM, PROPN, ...)
  std::vector<LabelledSpan> entities;     // label = entity type
  std::vector<LabelledSpan> noun_chunks;  // label unused
  std::vector<LabelledSpan> clauses;      // label unused
};

class LinguisticAnnotator {
 public:
  virtual ~LinguisticAnnotator() = default;
  virtual LinguisticAnnotation annotate(const Passage& passage) = 0;
};

/// Start/end distributions over the context tokens of an extractive model.
struct SpanDistribution {
  std::vector<TokenOffset> tokens;
  std::vector<double> start_probs;
  std::vector<double> end_probs;
};

class SpanPredictor {
 public:
  virtual ~SpanPredictor() = default;
  /// `question` is empty for passage-only (answer candidate) inputs.
  virtual SpanDistribution predict(std::string_view context, std::string_view question) = 0;
};

struct QaPrediction {
  std::string text;
  double confidence = 0.0;
};

/// Extractive QA model that answers a question about a passage.
class QaModel {
 public:
  virtual ~QaModel() = default;
  virtual QaPrediction answer(std::string_view context, std::string_view question) = 0;
};

/// Token sequence with code-point offsets for the whole encoder input.
class TokenEncoder {
 public:
  virtual ~TokenEncoder() = default;
  virtual std::vector<TokenOffset> tokenize(std::string_view text) = 0;
};

struct GeneratedSequence {
  std::string text;
  double log_prob = 0.0;  // length-normalized (mean per-token) log probability
};

class SequenceGenerator {
 public:
  virtual ~SequenceGenerator() = default;
  /// Must be deterministic for beam strategies given the config seed.
  virtual std::vector<GeneratedSequence> generate(std::string_view prompt,
                                                  const DecodeConfig& config) = 0;
};

}  // namespace synqa
