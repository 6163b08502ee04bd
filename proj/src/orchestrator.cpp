// SPDX-License-Identifier: Apache-2.0
#include "synqa/orchestrator.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "synqa/hash.hpp"
#include "synqa/io.hpp"
#include "synqa/shuffle.hpp"

namespace synqa {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(FilterMethod m) {
  switch (m) {
    case FilterMethod::none: return "none";
    case FilterMethod::answer_confidence: return "answer_confidence";
    case FilterMethod::generator_confidence: return "generator_confidence";
    case FilterMethod::roundtrip: return "roundtrip";
    case FilterMethod::self_training: return "self_training";
    case FilterMethod::combined: return "combined";
  }
  return "none";
}

FilterMethod parse_filter_method(std::string_view s) {
  for (auto m : {FilterMethod::none, FilterMethod::answer_confidence,
                 FilterMethod::generator_confidence, FilterMethod::roundtrip,
                 FilterMethod::self_training, FilterMethod::combined})
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown filter method '" + std::string(s) + "'");
}

void PipelineConfig::validate() const {
  if (passage_path.empty()) throw std::invalid_argument("pipeline: passage path is required");
  if (!fs::exists(passage_path))
    throw std::invalid_argument("pipeline: passage file not found: " + passage_path.string());
  if (decontamination.enabled) {
    if (decontamination.n < 1) throw std::invalid_argument("pipeline: decontamination n must be >= 1");
    for (const auto& p : decontamination.eval_paths)
      if (!fs::exists(p)) throw std::invalid_argument("pipeline: eval file not found: " + p.string());
  }
  if (selection_method == SelectionMethod::generative)
    throw std::invalid_argument(
        "pipeline: generative answers come from end-to-end generation, not candidate selection");
  if (selection_method == SelectionMethod::span_extraction && candidates_per_passage == 0)
    throw std::invalid_argument("pipeline: candidates_per_passage must be >= 1");
  if (!(candidate_threshold > 0.0 && candidate_threshold < 1.0))
    throw std::invalid_argument("pipeline: candidate_threshold must lie in (0, 1)");
  if (!sal_head_path.empty() && !fs::exists(sal_head_path))
    throw std::invalid_argument("pipeline: SAL head not found: " + sal_head_path.string());
  if (output_dir.empty()) throw std::invalid_argument("pipeline: output_dir is required");
  decode_config.validate();
  filter_config.validate();
}

void to_json(json& j, const PipelineConfig& c) {
  std::vector<std::string> eval_paths;
  for (const auto& p : c.decontamination.eval_paths) eval_paths.push_back(p.string());
  j = json{{"passage_source",
            {{"path", c.passage_path.string()}, {"source", to_string(c.passage_source)}}},
           {"decontamination",
            {{"enabled", c.decontamination.enabled},
             {"n", c.decontamination.n},
             {"eval_paths", eval_paths}}},
           {"selection_method", to_string(c.selection_method)},
           {"candidates_per_passage", c.candidates_per_passage},
           {"candidate_threshold", c.candidate_threshold},
           {"sal_head", c.sal_head_path.string()},
           {"decode_config", c.decode_config},
           {"filter_method", to_string(c.filter_method)},
           {"filter_config", c.filter_config},
           {"output_dir", c.output_dir.string()},
           {"seed", c.seed}};
}

void from_json(const json& j, PipelineConfig& c) {
  PipelineConfig d;
  if (j.contains("passage_source")) {
    const auto& ps = j["passage_source"];
    c.passage_path = ps.value("path", std::string());
    c.passage_source = parse_passage_source(ps.value("source", std::string("external")));
  }
  if (j.contains("decontamination")) {
    const auto& dc = j["decontamination"];
    c.decontamination.enabled = dc.value("enabled", d.decontamination.enabled);
    c.decontamination.n = dc.value("n", d.decontamination.n);
    c.decontamination.eval_paths.clear();
    for (const auto& p : dc.value("eval_paths", std::vector<std::string>{}))
      c.decontamination.eval_paths.emplace_back(p);
  }
  if (j.contains("selection_method"))
    c.selection_method = parse_selection_method(j["selection_method"].get<std::string>());
  c.candidates_per_passage = j.value("candidates_per_passage", d.candidates_per_passage);
  c.candidate_threshold = j.value("candidate_threshold", d.candidate_threshold);
  c.sal_head_path = j.value("sal_head", std::string());
  if (j.contains("decode_config")) c.decode_config = j["decode_config"].get<DecodeConfig>();
  if (j.contains("filter_method"))
    c.filter_method = parse_filter_method(j["filter_method"].get<std::string>());
  if (j.contains("filter_config")) c.filter_config = j["filter_config"].get<FilterConfig>();
  c.output_dir = j.value("output_dir", std::string());
  c.seed = j.value("seed", d.seed);
}

std::string config_hash(const PipelineConfig& c) {
  json j = c;
  j.erase("output_dir");
  return sha256_hex(j.dump());
}

void to_json(json& j, const Manifest& m) {
  json stages = json::array();
  for (const auto& s : m.stages)
    stages.push_back({{"name", s.name}, {"in", s.in}, {"out", s.out}, {"dropped", s.dropped}});
  j = json{{"config_hash", m.config_hash},
           {"seed", m.seed},
           {"stages", stages},
           {"started_at", m.started_at},
           {"finished_at", m.finished_at}};
  if (m.failed_stage) j["failed_stage"] = *m.failed_stage;
  if (m.error) j["error"] = *m.error;
}

void from_json(const json& j, Manifest& m) {
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.stages.clear();
  for (const auto& s : j.at("stages"))
    m.stages.push_back({s.at("name").get<std::string>(), s.at("in").get<std::size_t>(),
                        s.at("out").get<std::size_t>(), s.at("dropped").get<std::size_t>()});
  m.started_at = j.value("started_at", std::string());
  m.finished_at = j.value("finished_at", std::string());
  if (j.contains("failed_stage")) m.failed_stage = j["failed_stage"].get<std::string>();
  if (j.contains("error")) m.error = j["error"].get<std::string>();
}

std::string default_clock() {
  std::time_t t = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde != nullptr && *sde != '\0')
    t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

filters::FilterResult keep_partition(const char* name, std::size_t input, filters::Partition part) {
  filters::FilterResult r;
  r.stages.push_back({name, input, part.kept.size(), 0, part.dropped.size()});
  for (auto& ex : part.kept) {
    ex.state = ExampleState::kept;
    ex.final_answer = ex.answer;
    r.examples.push_back(std::move(ex));
  }
  return r;
}

std::map<std::string, EnsembleVerdict> verdicts_for(
    const std::vector<SyntheticExample>& examples,
    const std::map<std::string, std::string>& passage_texts, const std::vector<QaModel*>& ensemble) {
  std::map<std::string, EnsembleVerdict> out;
  for (const auto& ex : examples) {
    auto it = passage_texts.find(ex.passage_id);
    if (it == passage_texts.end())
      throw std::invalid_argument("example '" + ex.id + "' references unknown passage '" +
                                  ex.passage_id + "'");
    out.emplace(ex.id, filters::roundtrip_verdict(ex, it->second, ensemble));
  }
  return out;
}

std::string padded(std::size_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, v);
  return buf;
}

}  // namespace

filters::FilterResult apply_filter_method(FilterMethod method, const std::vector<SyntheticExample>& examples,
                                 const std::map<std::string, std::string>& passage_texts,
                                 const std::vector<QaModel*>& ensemble, const FilterConfig& config) {
  config.validate();
  const bool needs_ensemble = method == FilterMethod::roundtrip ||
                              method == FilterMethod::self_training ||
                              method == FilterMethod::combined;
  if (needs_ensemble && static_cast<int>(ensemble.size()) != config.n_members)
    throw std::invalid_argument("filter: ensemble has " + std::to_string(ensemble.size()) +
                                " members, config expects " + std::to_string(config.n_members));
  switch (method) {
    case FilterMethod::none:
      return keep_partition("none", examples.size(), {examples, {}});
    case FilterMethod::answer_confidence:
      return keep_partition("answer_confidence", examples.size(),
                            filters::filter_by_answer_confidence(examples, config.answer_conf_thresh));
    case FilterMethod::generator_confidence:
      return keep_partition("generator_confidence", examples.size(),
                            filters::filter_by_generator_confidence(examples, config.gen_conf_thresh));
    case FilterMethod::roundtrip: {
      const auto verdicts = verdicts_for(examples, passage_texts, ensemble);
      std::vector<EnsembleVerdict> ordered;
      for (const auto& ex : examples) ordered.push_back(verdicts.at(ex.id));
      const auto ids = filters::filter_roundtrip(ordered, config.roundtrip_min_correct);
      filters::Partition part;
      std::size_t k = 0;
      for (const auto& ex : examples) {
        if (k < ids.size() && ids[k] == ex.id) {
          part.kept.push_back(ex);
          ++k;
        } else {
          part.dropped.push_back(ex);
        }
      }
      return keep_partition("roundtrip", examples.size(), std::move(part));
    }
    case FilterMethod::self_training:
      return filters::self_training_filter(examples, verdicts_for(examples, passage_texts, ensemble),
                                           passage_texts, config);
    case FilterMethod::combined: {
      const auto survivors =
          filters::filter_by_answer_confidence(examples, config.answer_conf_thresh).kept;
      return filters::combined_filter(examples, verdicts_for(survivors, passage_texts, ensemble),
                                      passage_texts, config);
    }
  }
  throw std::logic_error("unhandled filter method");
}

PipelineResult run_pipeline(const PipelineConfig& config, const PipelineBackends& backends,
                            const Clock& clock) {
  config.validate();
  PipelineResult result;
  Manifest& m = result.manifest;
  m.config_hash = config_hash(config);
  m.seed = config.seed;
  m.started_at = clock();
  result.dataset_path = config.output_dir / "dataset.jsonl";
  result.manifest_path = config.output_dir / "manifest.json";

  std::string stage = kStagePassageSelection;
  StageRecord current;
  try {
    // (i) passage selection
    current = {stage, 0, 0, 0};
    auto passages = io::read_passages(config.passage_path, config.passage_source);
    current.in = passages.size();
    if (config.decontamination.enabled) {
      ContaminationIndex index(config.decontamination.n);
      for (const auto& p : config.decontamination.eval_paths)
        for (const auto& ep : io::read_passages(p, PassageSource::eval_set)) index.add_passage(ep);
      auto dec = decontaminate(passages, index);
      passages = std::move(dec.kept);
    }
    current.out = passages.size();
    current.dropped = current.in - current.out;
    m.stages.push_back(current);

    std::map<std::string, std::string> passage_texts;
    for (const auto& p : passages) passage_texts.emplace(p.id, p.text);

    // (ii) answer candidate selection
    stage = kStageAnswerSelection;
    current = {stage, passages.size(), 0, 0};
    std::optional<sal::SalHead> loaded_head;
    const sal::SalHead* head = backends.sal_head;
    if (config.selection_method == SelectionMethod::sal && head == nullptr) {
      if (config.sal_head_path.empty())
        throw std::invalid_argument("SAL selection needs a trained head");
      std::ifstream in(config.sal_head_path);
      std::stringstream ss;
      ss << in.rdbuf();
      loaded_head = sal::SalHead::from_json(ss.str());
      head = &*loaded_head;
    }
    std::vector<std::pair<const Passage*, std::vector<AnswerCandidate>>> candidates;
    for (const auto& p : passages) {
      std::vector<AnswerCandidate> found;
      switch (config.selection_method) {
        case SelectionMethod::pos_extended:
        case SelectionMethod::noun_chunks:
        case SelectionMethod::named_entities:
          if (backends.annotator == nullptr)
            throw std::invalid_argument("linguistic selection needs an annotator backend");
          found = select_linguistic_candidates(p, *backends.annotator, config.selection_method);
          break;
        case SelectionMethod::span_extraction:
          if (backends.span_predictor == nullptr)
            throw std::invalid_argument("span extraction needs a span predictor backend");
          found = select_span_extraction_candidates(p, *backends.span_predictor,
                                                    config.candidates_per_passage);
          break;
        case SelectionMethod::sal: {
          auto decoded = sal::select_sal_candidates(*head, p);
          for (auto& c : decoded.candidates) {
            if (c.confidence >= config.candidate_threshold)
              found.push_back(std::move(c));
            else
              ++current.dropped;
          }
          break;
        }
        case SelectionMethod::generative:
          throw std::logic_error("generative selection rejected by validate()");
      }
      current.out += found.size();
      candidates.emplace_back(&p, std::move(found));
    }
    m.stages.push_back(current);

    // (iii) question generation
    stage = kStageQuestionGeneration;
    current = {stage, m.stages.back().out, 0, 0};
    if (backends.generator == nullptr && current.in > 0)
      throw std::invalid_argument("question generation needs a generator backend");
    DecodeConfig decode = config.decode_config;
    decode.seed = config.seed;
    std::vector<SyntheticExample> examples;
    for (const auto& [passage, cands] : candidates) {
      for (std::size_t ci = 0; ci < cands.size(); ++ci) {
        const auto questions = qgen::generate(*backends.generator, cands[ci].span, *passage, decode);
        if (questions.empty()) ++current.dropped;
        for (std::size_t qi = 0; qi < questions.size(); ++qi) {
          SyntheticExample ex;
          ex.id = passage->id + "-a" + padded(ci, 3) + "-q" + padded(qi, 2);
          ex.passage_id = passage->id;
          ex.answer = cands[ci].span;
          ex.question = questions[qi].text;
          ex.answer_confidence = cands[ci].confidence;
          ex.gen_score = questions[qi].score;
          ex.config_id = questions[qi].config_id;
          examples.push_back(std::move(ex));
        }
      }
    }
    std::sort(examples.begin(), examples.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    current.out = examples.size();
    m.stages.push_back(current);

    // (iv) filtering and relabelling
    stage = kStageFiltering;
    current = {stage, examples.size(), 0, 0};
    auto filtered = apply_filter_method(config.filter_method, examples, passage_texts,
                                        backends.ensemble, config.filter_config);
    std::sort(filtered.examples.begin(), filtered.examples.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    current.out = filtered.examples.size();
    current.dropped = current.in - current.out;
    m.stages.push_back(current);

    result.examples = std::move(filtered.examples);
    io::write_jsonl_of(result.dataset_path, result.examples);
    m.finished_at = clock();
    io::write_json(result.manifest_path, json(m));
  } catch (const std::exception& e) {
    m.failed_stage = stage;
    m.error = e.what();
    if (m.stages.empty() || m.stages.back().name != stage) m.stages.push_back(current);
    m.finished_at = clock();
    try {
      io::write_json(result.manifest_path, json(m));
    } catch (...) {
    }
    throw;
  }
  return result;
}

std::string_view to_string(ScheduleMode m) {
  return m == ScheduleMode::two_stage ? "two_stage" : "mixed";
}

ScheduleMode parse_schedule_mode(std::string_view s) {
  if (s == "two_stage") return ScheduleMode::two_stage;
  if (s == "mixed") return ScheduleMode::mixed;
  throw std::invalid_argument("unknown schedule mode '" + std::string(s) + "'");
}

void to_json(json& j, const TrainingSchedule& s) {
  json stages = json::array();
  for (const auto& st : s.stages)
    stages.push_back({{"name", st.name},
                      {"sources", st.sources},
                      {"examples", st.examples},
                      {"budget", st.budget}});
  j = json{{"mode", to_string(s.mode)}, {"stages", stages}};
}

std::vector<std::string> resolve_jsonl_ids(const DatasetRef& ref) {
  if (!fs::exists(ref.path))
    throw std::invalid_argument("dataset '" + ref.name + "' not found at " + ref.path.string());
  std::vector<std::string> ids;
  std::size_t line = 0;
  for (const auto& row : io::read_jsonl(ref.path)) {
    ++line;
    std::string id = std::to_string(line);
    for (const char* key : {"id", "example_id"})
      if (row.is_object() && row.contains(key) && row[key].is_string()) {
        id = row[key].get<std::string>();
        break;
      }
    ids.push_back(std::move(id));
  }
  return ids;
}

TrainingSchedule build_schedule(const DatasetRef& synthetic, const std::vector<DatasetRef>& human,
                                ScheduleMode mode, std::uint64_t seed, const RefResolver& resolve) {
  if (human.empty()) throw std::invalid_argument("build_schedule: no human datasets");
  auto collect = [&](const DatasetRef& ref, ScheduleStage& st) {
    st.sources.push_back(ref.name);
    for (auto& id : resolve(ref)) st.examples.push_back(ref.name + "/" + id);
  };
  TrainingSchedule s;
  s.mode = mode;
  if (mode == ScheduleMode::two_stage) {
    ScheduleStage first{"synthetic", {}, {}, json::object()};
    collect(synthetic, first);
    ScheduleStage second{"human", {}, {}, json::object()};
    for (const auto& h : human) collect(h, second);
    s.stages.push_back(std::move(first));
    s.stages.push_back(std::move(second));
  } else {
    ScheduleStage all{"mixed", {}, {}, json::object()};
    collect(synthetic, all);
    for (const auto& h : human) collect(h, all);
    seeded_shuffle(std::span<std::string>(all.examples), seed);
    s.stages.push_back(std::move(all));
  }
  return s;
}

std::vector<std::string> default_selection_sets() {
  return {"squad_dev", "aqa_bidaf_dev", "aqa_bert_dev", "aqa_roberta_dev"};
}

std::string select_checkpoint(const std::vector<CheckpointEval>& evals,
                              const std::vector<std::string>& sets) {
  if (evals.empty()) throw std::invalid_argument("select_checkpoint: no checkpoints");
  if (sets.empty()) throw std::invalid_argument("select_checkpoint: no validation sets");
  auto ordered = sets;
  std::sort(ordered.begin(), ordered.end());
  const std::string* best = nullptr;
  double best_mean = 0.0;
  for (const auto& e : evals) {
    double sum = 0.0;
    for (const auto& name : ordered) {
      auto it = e.f1.find(name);
      if (it == e.f1.end())
        throw std::invalid_argument("select_checkpoint: checkpoint '" + e.checkpoint +
                                    "' has no evaluation on '" + name + "'");
      sum += it->second;
    }
    const double mean = sum / static_cast<double>(ordered.size());
    if (best == nullptr || mean > best_mean) {
      best = &e.checkpoint;
      best_mean = mean;
    }
  }
  return *best;
}

std::vector<CheckpointEval> StubTrainer::train(const TrainingSchedule& schedule) {
  std::vector<CheckpointEval> out;
  std::string history;
  for (std::size_t i = 0; i < schedule.stages.size(); ++i) {
    const auto& st = schedule.stages[i];
    for (const auto& ex : st.examples) history += ex + "\n";
    CheckpointEval ce;
    ce.checkpoint = "ckpt-" + std::to_string(i + 1) + "-" + st.name;
    for (const auto& set : default_selection_sets()) {
      const auto h = leading_u64(sha256(history + set));
      ce.f1[set] = 40.0 + static_cast<double>(h % 4000) / 100.0;
    }
    out.push_back(std::move(ce));
  }
  return out;
}

}  // namespace synqa
