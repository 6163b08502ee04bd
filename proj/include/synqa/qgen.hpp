// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "synqa/backends.hpp"
#include "synqa/corpus.hpp"
#include "synqa/span.hpp"

namespace synqa {

enum class DecodeStrategy { beam, diverse_beam, nucleus };

std::string_view to_string(DecodeStrategy s);
DecodeStrategy parse_decode_strategy(std::string_view s);

struct DecodeConfig {
  DecodeStrategy strategy = DecodeStrategy::beam;
  int beam_size = 5;
  int nbest = 1;
  double beam_strength = 1.0;  // diverse beam only
  double top_p = 0.75;         // nucleus only
  std::uint64_t seed = 0;

  /// Compact identifier such as "beam-b5-n1", "diverse-s0.5", "nucleus-p0.75".
  std::string id() const;
  /// Throws std::invalid_argument when the fields violate the strategy's ranges.
  void validate() const;
};

struct GeneratedQuestion {
  std::string text;
  double score = 0.0;  // exp(mean token log-prob), in (0, 1]
  std::string config_id;
  AnswerSpan prompt_answer;
};

namespace qgen {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kSep = "<sep>";

/// "<s> answer </s> passage </s>"
std::string serialize_prompt(const AnswerSpan& answer, const Passage& passage);

struct PromptParts {
  std::string answer;
  std::string passage;
};

/// Inverse of serialize_prompt; nullopt when the delimiters do not line up.
std::optional<PromptParts> parse_prompt(std::string_view prompt);

/// Runs the generator and keeps at most `nbest` distinct questions, sorted by
/// descending score (ties by text). Empty or non-finite outputs are dropped.
std::vector<GeneratedQuestion> generate(SequenceGenerator& generator, const AnswerSpan& answer,
                                        const Passage& passage, const DecodeConfig& config);

/// The decoding sweep: beam sizes {1,3,5,10} crossed with nbest {1,3,5,10}
/// (nbest <= beam size), diverse beam strengths {0.1,...,1.0}, nucleus top_p
/// {0.1,0.5,0.75}.
std::vector<DecodeConfig> build_decode_grid();

/// Recommended defaults: beam search, beam size 5, one question per answer.
DecodeConfig default_decode_config();

// End-to-end mode: the generator sees the passage alone and emits
// "answer <sep> question".
std::string serialize_end_to_end(const Passage& passage);

struct EndToEndPair {
  bool usable = false;
  std::string answer;
  std::string question;
  std::optional<AnswerSpan> span;  // set when usable
  std::string reason;              // why the pair is unusable
};

EndToEndPair parse_end_to_end(std::string_view output, const Passage& passage);

enum class Answerability { valid, target_answer_mismatch, ungrammatical, invalid };

std::string_view to_string(Answerability a);
Answerability parse_answerability(std::string_view s);

struct AnswerabilityRecord {
  std::string question_id;
  Answerability label = Answerability::valid;
};

/// Percentage of records per label; every label is present in the result.
std::map<Answerability, double> aggregate_answerability(
    const std::vector<AnswerabilityRecord>& records);

struct GeneratorTrainingExample {
  std::string prompt;
  std::string target;  // the question
};

/// Question-generation fine-tuning data: up to `limit` human examples drawn
/// from passages in `restrict_to` (empty = all), shuffled with `seed`.
struct HumanExample {
  AnswerSpan answer;
  std::string question;
};
std::vector<GeneratorTrainingExample> build_generator_training_set(
    const std::vector<HumanExample>& examples, const std::map<std::string, Passage>& passages,
    const std::vector<std::string>& restrict_to, std::size_t limit, std::uint64_t seed);

}  // namespace qgen
}  // namespace synqa
