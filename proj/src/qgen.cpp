// SPDX-License-Identifier: Apache-2.0
#include "synqa/qgen.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "synqa/shuffle.hpp"
#include "synqa/text.hpp"

namespace synqa {

std::string_view to_string(DecodeStrategy s) {
  switch (s) {
    case DecodeStrategy::beam: return "beam";
    case DecodeStrategy::diverse_beam: return "diverse_beam";
    case DecodeStrategy::nucleus: return "nucleus";
  }
  return "beam";
}

DecodeStrategy parse_decode_strategy(std::string_view s) {
  if (s == "beam") return DecodeStrategy::beam;
  if (s == "diverse_beam") return DecodeStrategy::diverse_beam;
  if (s == "nucleus") return DecodeStrategy::nucleus;
  throw std::invalid_argument("unknown decode strategy '" + std::string(s) + "'");
}

namespace {

std::string fmt_real(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string DecodeConfig::id() const {
  switch (strategy) {
    case DecodeStrategy::beam:
      return "beam-b" + std::to_string(beam_size) + "-n" + std::to_string(nbest);
    case DecodeStrategy::diverse_beam:
      return "diverse-b" + std::to_string(beam_size) + "-s" + fmt_real(beam_strength) + "-n" +
             std::to_string(nbest);
    case DecodeStrategy::nucleus:
      return "nucleus-p" + fmt_real(top_p) + "-n" + std::to_string(nbest);
  }
  return "unknown";
}

void DecodeConfig::validate() const {
  if (nbest < 1) throw std::invalid_argument("decode config: nbest must be >= 1");
  switch (strategy) {
    case DecodeStrategy::beam:
    case DecodeStrategy::diverse_beam:
      if (beam_size < 1) throw std::invalid_argument("decode config: beam_size must be >= 1");
      if (nbest > beam_size)
        throw std::invalid_argument("decode config: nbest " + std::to_string(nbest) +
                                    " exceeds beam_size " + std::to_string(beam_size));
      if (strategy == DecodeStrategy::diverse_beam && !(beam_strength > 0.0 && beam_strength <= 1.0))
        throw std::invalid_argument("decode config: beam_strength must lie in (0, 1]");
      break;
    case DecodeStrategy::nucleus:
      if (!(top_p > 0.0 && top_p <= 1.0))
        throw std::invalid_argument("decode config: top_p must lie in (0, 1]");
      break;
  }
}

namespace qgen {

std::string serialize_prompt(const AnswerSpan& answer, const Passage& passage) {
  if (passage.text.empty()) throw std::invalid_argument("serialize_prompt: empty passage");
  if (answer.passage_id != passage.id || !span_matches(answer, passage.text))
    throw std::invalid_argument("serialize_prompt: answer '" + answer.text +
                                "' is not a span of passage '" + passage.id + "'");
  std::string out;
  out.reserve(answer.text.size() + passage.text.size() + 16);
  out.append(kBos).append(" ").append(answer.text).append(" ").append(kEos).append(" ");
  out.append(passage.text).append(" ").append(kEos);
  return out;
}

std::optional<PromptParts> parse_prompt(std::string_view prompt) {
  const std::string head = std::string(kBos) + " ";
  const std::string tail = " " + std::string(kEos);
  const std::string mid = " " + std::string(kEos) + " ";
  if (prompt.size() < head.size() + tail.size() || !prompt.starts_with(head) ||
      !prompt.ends_with(tail))
    return std::nullopt;
  const auto body = prompt.substr(head.size(), prompt.size() - head.size() - tail.size());
  const auto cut = body.find(mid);
  if (cut == std::string_view::npos) return std::nullopt;
  return PromptParts{std::string(body.substr(0, cut)), std::string(body.substr(cut + mid.size()))};
}

std::vector<GeneratedQuestion> generate(SequenceGenerator& generator, const AnswerSpan& answer,
                                        const Passage& passage, const DecodeConfig& config) {
  config.validate();
  const auto prompt = serialize_prompt(answer, passage);
  std::vector<GeneratedSequence> raw;
  try {
    raw = generator.generate(prompt, config);
  } catch (const std::exception& e) {
    throw std::runtime_error("generator failed on prompt " + answer.passage_id + ":" +
                             std::to_string(answer.char_start) + "-" +
                             std::to_string(answer.char_end) + ": " + e.what());
  }
  std::unordered_map<std::string, double> best;
  for (const auto& seq : raw) {
    if (seq.text.empty() || !std::isfinite(seq.log_prob)) continue;
    const double score = std::min(1.0, std::exp(seq.log_prob));
    auto [it, fresh] = best.try_emplace(seq.text, score);
    if (!fresh) it->second = std::max(it->second, score);
  }
  std::vector<GeneratedQuestion> out;
  out.reserve(best.size());
  for (auto& [t, s] : best) out.push_back({t, s, config.id(), answer});
  std::sort(out.begin(), out.end(), [](const GeneratedQuestion& a, const GeneratedQuestion& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.text < b.text;
  });
  if (out.size() > static_cast<std::size_t>(config.nbest)) out.resize(config.nbest);
  return out;
}

std::vector<DecodeConfig> build_decode_grid() {
  static constexpr int kBeamSizes[] = {1, 3, 5, 10};
  static constexpr int kNbest[] = {1, 3, 5, 10};
  static constexpr double kStrengths[] = {0.1, 0.3, 0.5, 0.7, 0.9, 1.0};
  static constexpr double kTopP[] = {0.1, 0.5, 0.75};
  std::vector<DecodeConfig> grid;
  for (int b : kBeamSizes)
    for (int n : kNbest)
      if (n <= b) grid.push_back({DecodeStrategy::beam, b, n, 1.0, 1.0, 0});
  for (double s : kStrengths) grid.push_back({DecodeStrategy::diverse_beam, 5, 1, s, 1.0, 0});
  for (double p : kTopP) grid.push_back({DecodeStrategy::nucleus, 1, 1, 1.0, p, 0});
  return grid;
}

DecodeConfig default_decode_config() { return {DecodeStrategy::beam, 5, 1, 1.0, 1.0, 0}; }

std::string serialize_end_to_end(const Passage& passage) {
  if (passage.text.empty()) throw std::invalid_argument("serialize_end_to_end: empty passage");
  return std::string(kBos) + " " + passage.text + " " + std::string(kEos);
}

namespace {

std::string trim(std::string_view s) {
  auto cps = text::decode_utf8(s);
  std::size_t b = 0;
  std::size_t e = cps.size();
  while (b < e && text::is_py_space(cps[b])) ++b;
  while (e > b && text::is_py_space(cps[e - 1])) --e;
  return text::encode_utf8(std::u32string_view(cps).substr(b, e - b));
}

}  // namespace

EndToEndPair parse_end_to_end(std::string_view output, const Passage& passage) {
  EndToEndPair pair;
  const auto first = output.find(kSep);
  if (first == std::string_view::npos) {
    pair.reason = "missing separator";
    return pair;
  }
  if (output.find(kSep, first + kSep.size()) != std::string_view::npos) {
    pair.reason = "multiple separators";
    return pair;
  }
  pair.answer = trim(output.substr(0, first));
  pair.question = trim(output.substr(first + kSep.size()));
  if (pair.answer.empty() || pair.question.empty()) {
    pair.reason = "empty answer or question";
    return pair;
  }
  AnswerSpan span;
  if (!locate_span(passage.id, passage.text, pair.answer, span)) {
    pair.reason = "answer not found in passage";
    return pair;
  }
  pair.span = span;
  pair.usable = true;
  return pair;
}

std::string_view to_string(Answerability a) {
  switch (a) {
    case Answerability::valid: return "valid";
    case Answerability::target_answer_mismatch: return "target_answer_mismatch";
    case Answerability::ungrammatical: return "ungrammatical";
    case Answerability::invalid: return "invalid";
  }
  return "invalid";
}

Answerability parse_answerability(std::string_view s) {
  if (s == "valid") return Answerability::valid;
  if (s == "target_answer_mismatch") return Answerability::target_answer_mismatch;
  if (s == "ungrammatical") return Answerability::ungrammatical;
  if (s == "invalid") return Answerability::invalid;
  throw std::invalid_argument("unknown answerability label '" + std::string(s) + "'");
}

std::map<Answerability, double> aggregate_answerability(
    const std::vector<AnswerabilityRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate_answerability: no records");
  std::map<Answerability, double> pct{{Answerability::valid, 0.0},
                                      {Answerability::target_answer_mismatch, 0.0},
                                      {Answerability::ungrammatical, 0.0},
                                      {Answerability::invalid, 0.0}};
  for (const auto& r : records) pct[r.label] += 1.0;
  for (auto& [label, v] : pct) v = 100.0 * v / static_cast<double>(records.size());
  return pct;
}

std::vector<GeneratorTrainingExample> build_generator_training_set(
    const std::vector<HumanExample>& examples, const std::map<std::string, Passage>& passages,
    const std::vector<std::string>& restrict_to, std::size_t limit, std::uint64_t seed) {
  const std::set<std::string> allowed(restrict_to.begin(), restrict_to.end());
  std::vector<GeneratorTrainingExample> pool;
  for (const auto& ex : examples) {
    if (!allowed.empty() && !allowed.contains(ex.answer.passage_id)) continue;
    auto it = passages.find(ex.answer.passage_id);
    if (it == passages.end())
      throw std::invalid_argument("generator training example references unknown passage '" +
                                  ex.answer.passage_id + "'");
    pool.push_back({serialize_prompt(ex.answer, it->second), ex.question});
  }
  seeded_shuffle(std::span<GeneratorTrainingExample>(pool), seed);
  if (pool.size() > limit) pool.resize(limit);
  return pool;
}

}  // namespace qgen
}  // namespace synqa
