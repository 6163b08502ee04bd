// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synqa/answers.hpp"
#include "synqa/backends.hpp"
#include "synqa/filters.hpp"
#include "synqa/qgen.hpp"
#include "synqa/sal_head.hpp"

namespace synqa {

enum class FilterMethod {
  none,
  answer_confidence,
  generator_confidence,
  roundtrip,
  self_training,
  combined,
};

std::string_view to_string(FilterMethod m);
FilterMethod parse_filter_method(std::string_view s);

struct DecontaminationConfig {
  bool enabled = true;
  int n = kDefaultShingleSize;
  std::vector<std::filesystem::path> eval_paths;  // SQuAD JSON or passage JSONL
};

struct PipelineConfig {
  std::filesystem::path passage_path;
  PassageSource passage_source = PassageSource::external;
  DecontaminationConfig decontamination;
  SelectionMethod selection_method = SelectionMethod::sal;
  std::size_t candidates_per_passage = 10;  // span-extraction top-k
  double candidate_threshold = sal::kDefaultThreshold;
  std::filesystem::path sal_head_path;       // required for the sal method
  DecodeConfig decode_config = qgen::default_decode_config();
  FilterMethod filter_method = FilterMethod::self_training;
  FilterConfig filter_config;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on out-of-range fields or missing paths.
  void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

/// Hash of the run-relevant configuration. The output directory does not
/// take part, so the same run written to two places hashes the same.
std::string config_hash(const PipelineConfig& c);

struct StageRecord {
  std::string name;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t dropped = 0;
};

struct Manifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<StageRecord> stages;
  std::string started_at;
  std::string finished_at;
  std::optional<std::string> failed_stage;
  std::optional<std::string> error;
};

void to_json(nlohmann::json& j, const Manifest& m);
void from_json(const nlohmann::json& j, Manifest& m);

/// Borrowed backends. The annotator is needed for linguistic selection, the
/// span predictor for span extraction, the head for SAL.
struct PipelineBackends {
  LinguisticAnnotator* annotator = nullptr;
  SpanPredictor* span_predictor = nullptr;
  const sal::SalHead* sal_head = nullptr;
  SequenceGenerator* generator = nullptr;
  std::vector<QaModel*> ensemble;
};

/// Wall clock rendered as ISO-8601 UTC. Honours SOURCE_DATE_EPOCH.
using Clock = std::function<std::string()>;
std::string default_clock();

struct PipelineResult {
  std::filesystem::path dataset_path;
  std::filesystem::path manifest_path;
  Manifest manifest;
  std::vector<SyntheticExample> examples;
};

inline constexpr const char* kStagePassageSelection = "passage_selection";
inline constexpr const char* kStageAnswerSelection = "answer_selection";
inline constexpr const char* kStageQuestionGeneration = "question_generation";
inline constexpr const char* kStageFiltering = "filtering";

/// Passage selection, answer selection, question generation, filtering.
/// Writes dataset.jsonl and manifest.json under output_dir. On failure the
/// manifest names the failed stage and is written before rethrowing.
PipelineResult run_pipeline(const PipelineConfig& config, const PipelineBackends& backends,
                            const Clock& clock = default_clock);

/// Runs one filter method over generated examples. Ensemble verdicts are
/// computed on demand for the methods that need them.
filters::FilterResult apply_filter_method(FilterMethod method, const std::vector<SyntheticExample>& examples,
                                 const std::map<std::string, std::string>& passage_texts,
                                 const std::vector<QaModel*>& ensemble, const FilterConfig& config);

// --- training schedules and checkpoints ----------------------------------

enum class ScheduleMode { two_stage, mixed };

std::string_view to_string(ScheduleMode m);
ScheduleMode parse_schedule_mode(std::string_view s);

struct DatasetRef {
  std::string name;
  std::filesystem::path path;
};

struct ScheduleStage {
  std::string name;
  std::vector<std::string> sources;   // dataset names
  std::vector<std::string> examples;  // "<dataset>/<example id>"
  nlohmann::json budget = nlohmann::json::object();  // opaque to the orchestrator
};

struct TrainingSchedule {
  ScheduleMode mode = ScheduleMode::two_stage;
  std::vector<ScheduleStage> stages;
};

void to_json(nlohmann::json& j, const TrainingSchedule& s);

/// Example ids of a dataset. Throws std::invalid_argument for missing refs.
using RefResolver = std::function<std::vector<std::string>(const DatasetRef&)>;

/// Reads the "id" (or "example_id") field of every JSONL line, falling back to
/// the line number.
std::vector<std::string> resolve_jsonl_ids(const DatasetRef& ref);

TrainingSchedule build_schedule(const DatasetRef& synthetic, const std::vector<DatasetRef>& human,
                                ScheduleMode mode, std::uint64_t seed,
                                const RefResolver& resolve = resolve_jsonl_ids);

struct CheckpointEval {
  std::string checkpoint;
  std::map<std::string, double> f1;  // validation set -> F1
};

/// The four validation sets used for model selection.
std::vector<std::string> default_selection_sets();

/// Highest unweighted mean F1 over `sets`; ties go to the earliest checkpoint.
std::string select_checkpoint(const std::vector<CheckpointEval>& evals,
                              const std::vector<std::string>& sets = default_selection_sets());

/// Training is delegated: schedule in, evaluated checkpoints out.
class TrainerBackend {
 public:
  virtual ~TrainerBackend() = default;
  virtual std::vector<CheckpointEval> train(const TrainingSchedule& schedule) = 0;
};

/// Deterministic fake trainer: one checkpoint per stage, scores derived from
/// the stage contents.
class StubTrainer final : public TrainerBackend {
 public:
  std::vector<CheckpointEval> train(const TrainingSchedule& schedule) override;
};

}  // namespace synqa
