// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "synqa/annotation.hpp"
#include "synqa/answers.hpp"
#include "synqa/corpus.hpp"
#include "synqa/filters.hpp"
#include "synqa/metrics.hpp"
#include "synqa/qgen.hpp"
#include "synqa/span.hpp"

namespace synqa {

using json = nlohmann::json;

void to_json(json& j, const Passage& p);
void from_json(const json& j, Passage& p);
void to_json(json& j, const AnswerSpan& s);
void from_json(const json& j, AnswerSpan& s);
void to_json(json& j, const AnswerCandidate& c);
void from_json(const json& j, AnswerCandidate& c);
void to_json(json& j, const AlignedAnswerSet& a);
void from_json(const json& j, AlignedAnswerSet& a);
void to_json(json& j, const DecodeConfig& c);
void from_json(const json& j, DecodeConfig& c);
void to_json(json& j, const FilterConfig& c);
void from_json(const json& j, FilterConfig& c);
void to_json(json& j, const GeneratedQuestion& q);
void from_json(const json& j, GeneratedQuestion& q);
void to_json(json& j, const SyntheticExample& e);
void from_json(const json& j, SyntheticExample& e);
void to_json(json& j, const QaPrediction& p);
void from_json(const json& j, QaPrediction& p);
void to_json(json& j, const EnsembleVerdict& v);
void from_json(const json& j, EnsembleVerdict& v);
void to_json(json& j, const AnnotationRecord& r);
void from_json(const json& j, AnnotationRecord& r);

namespace metrics {
void to_json(json& j, const AnnotatorStats& s);
void from_json(const json& j, AnnotatorStats& s);
}  // namespace metrics

namespace io {

/// One JSON value per non-blank line. Errors name the file and line.
std::vector<json> read_jsonl(const std::filesystem::path& path);

/// Writes through a temporary file and renames it into place.
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);
void write_json(const std::filesystem::path& path, const json& value);
json read_json(const std::filesystem::path& path);

template <typename T>
std::vector<T> read_jsonl_as(const std::filesystem::path& path) {
  std::vector<T> out;
  std::size_t line = 0;
  for (const auto& row : read_jsonl(path)) {
    ++line;
    try {
      out.push_back(row.get<T>());
    } catch (const json::exception& e) {
      throw std::invalid_argument(path.string() + ": record " + std::to_string(line) + ": " +
                                  e.what());
    }
  }
  return out;
}

template <typename T>
void write_jsonl_of(const std::filesystem::path& path, const std::vector<T>& items) {
  std::vector<json> rows;
  rows.reserve(items.size());
  for (const auto& item : items) rows.emplace_back(item);
  write_jsonl(path, rows);
}

struct SquadQuestion {
  std::string id;
  std::string passage_id;
  std::string question;
  std::vector<AnswerSpan> answers;
};

struct SquadData {
  std::vector<Passage> passages;
  std::vector<SquadQuestion> questions;
};

/// Parses the SQuAD v1.1 layout (data -> paragraphs -> qas). Passage ids are
/// content hashes; answer offsets are code points.
SquadData parse_squad(const json& doc, PassageSource source, Split split, SourceDataset dataset);
SquadData read_squad(const std::filesystem::path& path, PassageSource source, Split split,
                     SourceDataset dataset);

/// Passages from either a SQuAD JSON file or a passage JSONL file (by extension).
std::vector<Passage> read_passages(const std::filesystem::path& path, PassageSource source,
                                   Split split = Split::none);

/// Candidate JSONL: one row per passage and method,
/// {passage_id, method, candidates: [{start, end, text, confidence}]}.
std::vector<json> candidate_records(const std::vector<AnswerCandidate>& candidates);
void write_candidates(const std::filesystem::path& path,
                      const std::vector<AnswerCandidate>& candidates);
std::vector<AnswerCandidate> read_candidates(const std::filesystem::path& path);

/// Pairs a {question id: prediction} object with the gold answers. Questions
/// without a prediction score as an empty prediction.
std::vector<metrics::ScoredPrediction> join_predictions(const json& predictions,
                                                        const std::vector<SquadQuestion>& gold);

/// annotator_id,n_examples,n_validated_errors,vmer_pct
std::string annotator_stats_csv(const std::vector<metrics::AnnotatorStats>& stats);

}  // namespace io
}  // namespace synqa
