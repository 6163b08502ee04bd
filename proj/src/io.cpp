// SPDX-License-Identifier: Apache-2.0
#include "synqa/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "synqa/text.hpp"

namespace synqa {

void to_json(json& j, const Passage& p) {
  j = json{{"id", p.id},
           {"title", p.title},
           {"text", p.text},
           {"source", to_string(p.source)},
           {"split", to_string(p.split)}};
}

void from_json(const json& j, Passage& p) {
  p.text = j.at("text").get<std::string>();
  p.id = j.value("id", std::string());
  if (p.id.empty()) p.id = passage_id_for(p.text);
  p.title = j.value("title", std::string());
  p.source = parse_passage_source(j.value("source", std::string("external")));
  p.split = parse_split(j.value("split", std::string("none")));
}

void to_json(json& j, const AnswerSpan& s) {
  j = json{{"passage_id", s.passage_id},
           {"start", s.char_start},
           {"end", s.char_end},
           {"text", s.text},
           {"source_dataset", to_string(s.source_dataset)}};
}

void from_json(const json& j, AnswerSpan& s) {
  s.passage_id = j.value("passage_id", std::string());
  s.char_start = j.at("start").get<std::size_t>();
  s.char_end = j.at("end").get<std::size_t>();
  s.text = j.at("text").get<std::string>();
  s.source_dataset = parse_source_dataset(j.value("source_dataset", std::string("synthetic")));
}

void to_json(json& j, const AnswerCandidate& c) {
  j = json{{"span", c.span}, {"confidence", c.confidence}, {"method", to_string(c.method)}};
}

void from_json(const json& j, AnswerCandidate& c) {
  c.span = j.at("span").get<AnswerSpan>();
  c.confidence = j.value("confidence", 1.0);
  c.method = parse_selection_method(j.value("method", std::string("sal")));
}

void to_json(json& j, const AlignedAnswerSet& a) {
  json answers = json::array();
  for (const auto& s : a.answers)
    answers.push_back({{"start", s.char_start},
                       {"end", s.char_end},
                       {"text", s.text},
                       {"source_dataset", to_string(s.source_dataset)}});
  j = json{{"passage_id", a.passage.id},
           {"split", to_string(a.passage.split)},
           {"title", a.passage.title},
           {"text", a.passage.text},
           {"source", to_string(a.passage.source)},
           {"answers", answers}};
}

void from_json(const json& j, AlignedAnswerSet& a) {
  a.passage.id = j.at("passage_id").get<std::string>();
  a.passage.text = j.at("text").get<std::string>();
  a.passage.title = j.value("title", std::string());
  a.passage.split = parse_split(j.value("split", std::string("none")));
  a.passage.source = parse_passage_source(j.value("source", std::string("squad_train")));
  a.answers.clear();
  for (const auto& r : j.at("answers")) {
    auto s = r.get<AnswerSpan>();
    s.passage_id = a.passage.id;
    a.answers.push_back(std::move(s));
  }
}

void to_json(json& j, const DecodeConfig& c) {
  j = json{{"strategy", to_string(c.strategy)}, {"beam_size", c.beam_size},
           {"nbest", c.nbest},                  {"beam_strength", c.beam_strength},
           {"top_p", c.top_p},                  {"seed", c.seed}};
}

void from_json(const json& j, DecodeConfig& c) {
  DecodeConfig d;
  c.strategy = parse_decode_strategy(j.value("strategy", std::string(to_string(d.strategy))));
  c.beam_size = j.value("beam_size", d.beam_size);
  c.nbest = j.value("nbest", d.nbest);
  c.beam_strength = j.value("beam_strength", d.beam_strength);
  c.top_p = j.value("top_p", d.top_p);
  c.seed = j.value("seed", d.seed);
}

void to_json(json& j, const FilterConfig& c) {
  j = json{{"answer_conf_thresh", c.answer_conf_thresh},
           {"gen_conf_thresh", c.gen_conf_thresh},
           {"roundtrip_min_correct", c.roundtrip_min_correct},
           {"selftrain_keep_at", c.selftrain_keep_at},
           {"selftrain_relabel_at", c.selftrain_relabel_at},
           {"n_members", c.n_members}};
}

void from_json(const json& j, FilterConfig& c) {
  FilterConfig d;
  c.answer_conf_thresh = j.value("answer_conf_thresh", d.answer_conf_thresh);
  c.gen_conf_thresh = j.value("gen_conf_thresh", d.gen_conf_thresh);
  c.roundtrip_min_correct = j.value("roundtrip_min_correct", d.roundtrip_min_correct);
  c.selftrain_keep_at = j.value("selftrain_keep_at", d.selftrain_keep_at);
  c.selftrain_relabel_at = j.value("selftrain_relabel_at", d.selftrain_relabel_at);
  c.n_members = j.value("n_members", d.n_members);
}

void to_json(json& j, const GeneratedQuestion& q) {
  j = json{{"text", q.text},
           {"score", q.score},
           {"config_id", q.config_id},
           {"prompt_answer", q.prompt_answer}};
}

void from_json(const json& j, GeneratedQuestion& q) {
  q.text = j.at("text").get<std::string>();
  q.score = j.value("score", 0.0);
  q.config_id = j.value("config_id", std::string());
  q.prompt_answer = j.at("prompt_answer").get<AnswerSpan>();
}

void to_json(json& j, const SyntheticExample& e) {
  j = json{{"example_id", e.id},
           {"passage_id", e.passage_id},
           {"answer", e.answer},
           {"question", e.question},
           {"answer_confidence", e.answer_confidence},
           {"gen_score", e.gen_score},
           {"config_id", e.config_id},
           {"state", to_string(e.state)}};
  j["final_answer"] = e.final_answer ? json(*e.final_answer) : json(nullptr);
}

void from_json(const json& j, SyntheticExample& e) {
  e.id = j.contains("example_id") ? j["example_id"].get<std::string>() : j.at("id").get<std::string>();
  e.answer = j.at("answer").get<AnswerSpan>();
  e.passage_id = j.value("passage_id", e.answer.passage_id);
  if (e.answer.passage_id.empty()) e.answer.passage_id = e.passage_id;
  e.question = j.at("question").get<std::string>();
  e.answer_confidence = j.value("answer_confidence", 1.0);
  e.gen_score = j.value("gen_score", 1.0);
  e.config_id = j.value("config_id", std::string());
  e.state = parse_example_state(j.value("state", std::string("raw")));
  e.final_answer.reset();
  if (j.contains("final_answer") && !j["final_answer"].is_null())
  {
    e.final_answer = j["final_answer"].get<AnswerSpan>();
    if (e.final_answer->passage_id.empty()) e.final_answer->passage_id = e.passage_id;
  }
}

void to_json(json& j, const QaPrediction& p) {
  j = json{{"text", p.text}, {"confidence", p.confidence}};
}

void from_json(const json& j, QaPrediction& p) {
  p.text = j.at("text").get<std::string>();
  p.confidence = j.value("confidence", 0.0);
}

void to_json(json& j, const EnsembleVerdict& v) {
  j = json{{"example_id", v.example_id},   {"predictions", v.predictions},
           {"n_members", v.n_members},     {"n_correct", v.n_correct},
           {"diagnostics", v.diagnostics}};
}

void from_json(const json& j, EnsembleVerdict& v) {
  v.example_id = j.at("example_id").get<std::string>();
  v.predictions = j.at("predictions").get<std::vector<QaPrediction>>();
  v.n_members = j.value("n_members", static_cast<int>(v.predictions.size()));
  v.n_correct = j.value("n_correct", 0);
  v.diagnostics = j.value("diagnostics", std::vector<std::string>{});
}

void to_json(json& j, const AnnotationRecord& r) {
  j = json{{"record_id", r.record_id},
           {"annotator_id", r.annotator_id},
           {"arm", r.arm},
           {"passage_id", r.passage_id},
           {"question", r.question},
           {"annotator_answer", r.annotator_answer},
           {"model_answer", r.model_answer},
           {"fooled", r.fooled},
           {"validation", to_string(r.validation)},
           {"elapsed_seconds", r.elapsed_seconds},
           {"failed", r.failed}};
}

void from_json(const json& j, AnnotationRecord& r) {
  r.record_id = j.at("record_id").get<std::string>();
  r.annotator_id = j.at("annotator_id").get<std::string>();
  r.arm = j.value("arm", std::string());
  r.passage_id = j.value("passage_id", std::string());
  r.question = j.value("question", std::string());
  if (j.contains("annotator_answer")) r.annotator_answer = j["annotator_answer"].get<AnswerSpan>();
  r.model_answer = j.value("model_answer", std::string());
  r.fooled = j.at("fooled").get<bool>();
  r.validation = parse_validation(j.at("validation").get<std::string>());
  r.elapsed_seconds = j.value("elapsed_seconds", 0.0);
  r.failed = j.value("failed", false);
}

namespace metrics {

void to_json(json& j, const AnnotatorStats& s) {
  j = json{{"annotator_id", s.annotator_id},
           {"n_examples", s.n_examples},
           {"n_validated_errors", s.n_validated_errors}};
}

void from_json(const json& j, AnnotatorStats& s) {
  s.annotator_id = j.at("annotator_id").get<std::string>();
  s.n_examples = j.at("n_examples").get<long>();
  s.n_validated_errors = j.at("n_validated_errors").get<long>();
}

}  // namespace metrics

namespace io {

namespace {

std::string dump(const json& j, int indent = -1) {
  return j.dump(indent, ' ', false, json::error_handler_t::replace);
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::vector<json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
  std::string content;
  for (const auto& row : rows) {
    content += dump(row);
    content += '\n';
  }
  write_atomically(path, content);
}

void write_json(const std::filesystem::path& path, const json& value) {
  write_atomically(path, dump(value, 2) + "\n");
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

SquadData parse_squad(const json& doc, PassageSource source, Split split, SourceDataset dataset) {
  SquadData out;
  std::map<std::string, std::size_t> seen;
  for (const auto& article : doc.at("data")) {
    const auto title = article.value("title", std::string());
    for (const auto& para : article.at("paragraphs")) {
      Passage p;
      p.text = para.at("context").get<std::string>();
      p.id = passage_id_for(p.text);
      p.title = title;
      p.source = source;
      p.split = split;
      if (seen.emplace(p.id, out.passages.size()).second) out.passages.push_back(p);
      for (const auto& qa : para.value("qas", json::array())) {
        SquadQuestion q;
        q.id = qa.at("id").get<std::string>();
        q.passage_id = p.id;
        q.question = qa.at("question").get<std::string>();
        for (const auto& a : qa.value("answers", json::array())) {
          const auto answer_text = a.at("text").get<std::string>();
          const auto start = a.at("answer_start").get<std::size_t>();
          AnswerSpan s;
          s.passage_id = p.id;
          s.char_start = start;
          s.char_end = start + text::length(answer_text);
          s.text = answer_text;
          s.source_dataset = dataset;
          q.answers.push_back(std::move(s));
        }
        out.questions.push_back(std::move(q));
      }
    }
  }
  return out;
}

SquadData read_squad(const std::filesystem::path& path, PassageSource source, Split split,
                     SourceDataset dataset) {
  try {
    return parse_squad(read_json(path), source, split, dataset);
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": not a SQuAD file: " + e.what());
  }
}

std::vector<Passage> read_passages(const std::filesystem::path& path, PassageSource source,
                                   Split split) {
  if (path.extension() == ".json")
    return read_squad(path, source, split, SourceDataset::squad).passages;
  auto passages = read_jsonl_as<Passage>(path);
  for (auto& p : passages) {
    p.source = source;
    if (split != Split::none) p.split = split;
  }
  return passages;
}

std::vector<json> candidate_records(const std::vector<AnswerCandidate>& candidates) {
  std::vector<json> rows;
  std::map<std::string, std::size_t> row_of;
  for (const auto& c : candidates) {
    const auto key = c.span.passage_id + "\n" + std::string(to_string(c.method));
    auto [it, fresh] = row_of.emplace(key, rows.size());
    if (fresh)
      rows.push_back({{"passage_id", c.span.passage_id},
                      {"method", to_string(c.method)},
                      {"candidates", json::array()}});
    rows[it->second]["candidates"].push_back({{"start", c.span.char_start},
                                              {"end", c.span.char_end},
                                              {"text", c.span.text},
                                              {"confidence", c.confidence}});
  }
  return rows;
}

void write_candidates(const std::filesystem::path& path,
                      const std::vector<AnswerCandidate>& candidates) {
  write_jsonl(path, candidate_records(candidates));
}

std::vector<AnswerCandidate> read_candidates(const std::filesystem::path& path) {
  std::vector<AnswerCandidate> out;
  std::size_t line = 0;
  for (const auto& row : read_jsonl(path)) {
    ++line;
    try {
      const auto pid = row.at("passage_id").get<std::string>();
      const auto method = parse_selection_method(row.at("method").get<std::string>());
      for (const auto& c : row.at("candidates")) {
        AnswerCandidate ac;
        ac.span = c.get<AnswerSpan>();
        ac.span.passage_id = pid;
        ac.confidence = c.value("confidence", 1.0);
        ac.method = method;
        out.push_back(std::move(ac));
      }
    } catch (const json::exception& e) {
      throw std::invalid_argument(path.string() + ": record " + std::to_string(line) + ": " +
                                  e.what());
    }
  }
  return out;
}

std::vector<metrics::ScoredPrediction> join_predictions(const json& predictions,
                                                        const std::vector<SquadQuestion>& gold) {
  if (!predictions.is_object())
    throw std::invalid_argument("predictions must be a JSON object of id -> answer");
  std::vector<metrics::ScoredPrediction> out;
  out.reserve(gold.size());
  for (const auto& q : gold) {
    metrics::ScoredPrediction sp;
    auto it = predictions.find(q.id);
    if (it != predictions.end()) sp.prediction = it->get<std::string>();
    for (const auto& a : q.answers) sp.golds.push_back(a.text);
    out.push_back(std::move(sp));
  }
  return out;
}

std::string annotator_stats_csv(const std::vector<metrics::AnnotatorStats>& stats) {
  std::ostringstream out;
  out << "annotator_id,n_examples,n_validated_errors,vmer_pct\n";
  for (const auto& s : stats) {
    const double rate = s.n_examples == 0 ? 0.0
                                          : 100.0 * static_cast<double>(s.n_validated_errors) /
                                                static_cast<double>(s.n_examples);
    out << s.annotator_id << ',' << s.n_examples << ',' << s.n_validated_errors << ',' << rate
        << '\n';
  }
  return out.str();
}

}  // namespace io
}  // namespace synqa
