// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synqa/answers.hpp"
#include "synqa/sal.hpp"
#include "synqa/tokenize.hpp"

// A small trainable SAL head over hashed lexical token features. It stands in
// for a transformer encoder at desk scale: the head, loss, masking and
// decoding are the real thing, only the token representations are shallow.

namespace synqa::sal {

struct HeadConfig {
  std::size_t hash_buckets = 256;
  std::size_t d_k = 16;
  std::size_t max_answer_len = kDefaultMaxAnswerTokens;
  double threshold = kDefaultThreshold;
  std::uint64_t seed = 13;
};

/// Token features: hashed lowercase word, hashed neighbours, and shape flags.
class Featurizer {
 public:
  explicit Featurizer(std::size_t hash_buckets) : buckets_(hash_buckets) {}
  std::size_t dim() const;
  Matrix features(std::string_view text, const std::vector<TokenOffset>& tokens) const;

 private:
  std::size_t buckets_;
};

class SalHead {
 public:
  explicit SalHead(HeadConfig config = {});

  const HeadConfig& config() const { return config_; }
  Projections project(const Matrix& features) const;

  /// One Adam step on a single passage. Returns the loss before the update.
  double train_step(const Matrix& features, const SpanMask& mask, const SpanMask& gold,
                    double learning_rate);

  std::string to_json() const;
  static SalHead from_json(const std::string& json);

 private:
  HeadConfig config_;
  Matrix wq_;
  Matrix wk_;
  // Adam moments
  Matrix mq_, vq_, mk_, vk_;
  long steps_ = 0;
};

/// Gold matrix for a passage's answers. Answers whose boundaries do not fall
/// on token boundaries, or which exceed the admissible mask, are counted in
/// `unmappable` and skipped.
SpanMask gold_matrix(const std::vector<TokenOffset>& tokens, const std::vector<AnswerSpan>& answers,
                     const SpanMask& mask, std::size_t* unmappable = nullptr);

struct TrainReport {
  std::vector<double> epoch_loss;
  std::size_t unmappable_answers = 0;
};

TrainReport train_head(SalHead& head, const std::vector<AlignedAnswerSet>& data, int epochs,
                       double learning_rate);

/// End-to-end SAL selection for one passage.
DecodedCandidates select_sal_candidates(const SalHead& head, const Passage& passage);

}  // namespace synqa::sal
