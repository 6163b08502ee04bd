// SPDX-License-Identifier: Apache-2.0
// synqa: command-line front end for the synthetic adversarial QA pipeline.

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "synqa/answers.hpp"
#include "synqa/corpus.hpp"
#include "synqa/eval_service.hpp"
#include "synqa/io.hpp"
#include "synqa/metrics.hpp"
#include "synqa/orchestrator.hpp"
#include "synqa/qgen.hpp"
#include "synqa/sal_head.hpp"
#include "synqa/stubs.hpp"

namespace fs = std::filesystem;
using namespace synqa;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path resolve_against(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute()) return p;
  return base / p;
}

DatasetRef parse_ref(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) return {fs::path(arg).stem().string(), arg};
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

std::map<std::string, std::string> passage_texts(const std::vector<Passage>& passages) {
  std::map<std::string, std::string> out;
  for (const auto& p : passages) out.emplace(p.id, p.text);
  return out;
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

// --- subcommand options ----------------------------------------------------

struct DecontaminateOpts {
  std::string candidates, out, dropped_out, report;
  std::vector<std::string> eval;
  int n = kDefaultShingleSize;
  std::string source = "external";
};

int run_decontaminate(const DecontaminateOpts& o) {
  const auto candidates = io::read_passages(o.candidates, parse_passage_source(o.source));
  std::vector<Passage> eval;
  for (const auto& p : o.eval) {
    auto ps = io::read_passages(p, PassageSource::eval_set);
    eval.insert(eval.end(), ps.begin(), ps.end());
  }
  const auto res = decontaminate(candidates, eval, o.n);
  io::write_jsonl_of(o.out, res.kept);
  if (!o.dropped_out.empty()) io::write_jsonl_of(o.dropped_out, res.dropped);
  json rep{{"n", res.report.n},
           {"total", res.report.total},
           {"dropped", res.report.dropped},
           {"dropped_fraction", res.report.dropped_fraction}};
  if (!o.report.empty()) io::write_json(o.report, rep);
  print_json(rep);
  return 0;
}

struct AlignOpts {
  std::vector<std::string> datasets;  // tag=path
  std::string split = "train";
  std::string out_dir;
};

int run_align(const AlignOpts& o) {
  std::map<std::string, Passage> passages;
  std::vector<AnswerDataset> datasets;
  for (const auto& arg : o.datasets) {
    const auto ref = parse_ref(arg);
    const auto tag = parse_source_dataset(ref.name);
    const auto data = io::read_squad(ref.path, PassageSource::squad_train, parse_split(o.split), tag);
    for (const auto& p : data.passages) passages.emplace(p.id, p);
    AnswerDataset ds;
    ds.source = tag;
    for (const auto& q : data.questions)
      for (const auto& a : q.answers) ds.answers[q.passage_id].push_back(a);
    datasets.push_back(std::move(ds));
  }
  const auto grouped = align_answer_sets(datasets, passages);
  json stats = json::object();
  for (const auto& [split, sets] : grouped) {
    const auto name = std::string(to_string(split));
    io::write_jsonl_of(fs::path(o.out_dir) / ("aligned_" + name + ".jsonl"), sets);
    const auto st = overlap_stats(sets);
    stats[name] = {{"passages", sets.size()},
                   {"answers_per_passage", st.answers_per_passage},
                   {"pct_overlapping_answers", st.pct_overlapping_answers},
                   {"pct_passages_with_overlap", st.pct_passages_with_overlap}};
  }
  print_json(stats);
  return 0;
}

struct SelectOpts {
  std::string passages, out, method = "sal", head;
  std::size_t k = 10;
  double threshold = sal::kDefaultThreshold;
};

int run_select(const SelectOpts& o) {
  const auto method = parse_selection_method(o.method);
  const auto passages = io::read_passages(o.passages, PassageSource::external);
  stubs::RuleAnnotator annotator;
  stubs::ToySpanPredictor predictor;
  std::optional<sal::SalHead> head;
  if (method == SelectionMethod::sal) {
    if (o.head.empty()) throw std::invalid_argument("--head is required for the sal method");
    head = sal::SalHead::from_json(slurp(o.head));
  }
  std::vector<AnswerCandidate> all;
  for (const auto& p : passages) {
    std::vector<AnswerCandidate> found;
    switch (method) {
      case SelectionMethod::sal:
        for (auto& c : sal::select_sal_candidates(*head, p).candidates)
          if (c.confidence >= o.threshold) found.push_back(std::move(c));
        break;
      case SelectionMethod::span_extraction:
        found = select_span_extraction_candidates(p, predictor, o.k);
        break;
      case SelectionMethod::generative:
        throw std::invalid_argument("generative answers come from end-to-end generation");
      default:
        found = select_linguistic_candidates(p, annotator, method);
    }
    all.insert(all.end(), found.begin(), found.end());
  }
  io::write_candidates(o.out, all);
  print_json({{"passages", passages.size()}, {"candidates", all.size()}});
  return 0;
}

struct TrainSalOpts {
  std::string aligned, out;
  int epochs = 20;
  double lr = 0.01;
  std::uint64_t seed = 13;
};

int run_train_sal(const TrainSalOpts& o) {
  const auto data = io::read_jsonl_as<AlignedAnswerSet>(o.aligned);
  sal::HeadConfig cfg;
  cfg.seed = o.seed;
  sal::SalHead head(cfg);
  const auto report = sal::train_head(head, data, o.epochs, o.lr);
  std::ofstream(o.out) << head.to_json();
  print_json({{"epoch_loss", report.epoch_loss}, {"unmappable_answers", report.unmappable_answers}});
  return 0;
}

struct GenerateOpts {
  std::string candidates, passages, out;
  DecodeConfig decode = qgen::default_decode_config();
  std::string strategy = "beam";
  bool grid = false;
};

int run_generate(GenerateOpts o) {
  o.decode.strategy = parse_decode_strategy(o.strategy);
  const auto candidates = io::read_candidates(o.candidates);
  std::map<std::string, Passage> passages;
  for (auto& p : io::read_passages(o.passages, PassageSource::external)) passages.emplace(p.id, p);
  stubs::TemplateGenerator generator;
  const auto configs = o.grid ? qgen::build_decode_grid() : std::vector<DecodeConfig>{o.decode};
  std::vector<SyntheticExample> out;
  std::map<std::string, int> per_passage;
  for (const auto& cfg : configs) {
    for (const auto& c : candidates) {
      auto it = passages.find(c.span.passage_id);
      if (it == passages.end())
        throw std::invalid_argument("candidate references unknown passage " + c.span.passage_id);
      auto seeded = cfg;
      seeded.seed = o.decode.seed;
      for (const auto& q : qgen::generate(generator, c.span, it->second, seeded)) {
        SyntheticExample ex;
        ex.id = c.span.passage_id + "-" + std::to_string(per_passage[c.span.passage_id]++);
        ex.passage_id = c.span.passage_id;
        ex.answer = c.span;
        ex.question = q.text;
        ex.answer_confidence = c.confidence;
        ex.gen_score = q.score;
        ex.config_id = q.config_id;
        out.push_back(std::move(ex));
      }
    }
  }
  io::write_jsonl_of(o.out, out);
  print_json({{"configs", configs.size()}, {"candidates", candidates.size()}, {"examples", out.size()}});
  return 0;
}

struct FilterOpts {
  std::string examples, passages, out, method = "self_training", verdicts, manifest;
  FilterConfig config;
};

int run_filter(const FilterOpts& o) {
  const auto method = parse_filter_method(o.method);
  auto examples = io::read_jsonl_as<SyntheticExample>(o.examples);
  const auto texts = passage_texts(io::read_passages(o.passages, PassageSource::external));
  filters::FilterResult result;
  if (!o.verdicts.empty() &&
      (method == FilterMethod::self_training || method == FilterMethod::combined)) {
    std::map<std::string, EnsembleVerdict> verdicts;
    for (auto& v : io::read_jsonl_as<EnsembleVerdict>(o.verdicts)) verdicts.emplace(v.example_id, v);
    result = method == FilterMethod::combined
                 ? filters::combined_filter(examples, verdicts, texts, o.config)
                 : filters::self_training_filter(examples, verdicts, texts, o.config);
  } else {
    auto owned = stubs::make_toy_ensemble(o.config.n_members);
    std::vector<QaModel*> ensemble;
    for (auto& m : owned) ensemble.push_back(m.get());
    result = apply_filter_method(method, examples, texts, ensemble, o.config);
  }
  io::write_jsonl_of(o.out, result.examples);
  json stages = json::array();
  for (const auto& s : result.stages)
    stages.push_back({{"name", s.name},
                      {"input", s.input},
                      {"kept", s.kept},
                      {"relabelled", s.relabelled},
                      {"discarded", s.discarded}});
  json report{{"method", o.method}, {"config", o.config}, {"stages", stages}};
  if (!o.manifest.empty()) io::write_json(o.manifest, report);
  print_json(report);
  return 0;
}

struct ScheduleOpts {
  std::string synthetic, out, mode = "two_stage";
  std::vector<std::string> human;
  std::uint64_t seed = 0;
};

int run_schedule(const ScheduleOpts& o) {
  std::vector<DatasetRef> human;
  for (const auto& h : o.human) human.push_back(parse_ref(h));
  const auto schedule = build_schedule(parse_ref(o.synthetic), human, parse_schedule_mode(o.mode), o.seed);
  json j = schedule;
  if (!o.out.empty()) io::write_json(o.out, j);
  json summary = json::array();
  for (const auto& st : schedule.stages)
    summary.push_back({{"name", st.name}, {"sources", st.sources}, {"examples", st.examples.size()}});
  print_json({{"mode", o.mode}, {"stages", summary}});
  return 0;
}

struct CheckpointOpts {
  std::string evals;
  std::vector<std::string> sets;
};

int run_select_checkpoint(const CheckpointOpts& o) {
  const auto doc = nlohmann::ordered_json::parse(slurp(o.evals));
  std::vector<CheckpointEval> evals;
  auto add = [&](const std::string& id, const nlohmann::ordered_json& scores) {
    CheckpointEval e;
    e.checkpoint = id;
    for (const auto& [k, v] : scores.items()) e.f1[k] = v.get<double>();
    evals.push_back(std::move(e));
  };
  if (doc.is_array()) {
    for (const auto& row : doc) add(row.at("checkpoint").get<std::string>(), row.at("f1"));
  } else {
    for (const auto& [id, scores] : doc.items()) add(id, scores);
  }
  const auto sets = o.sets.empty() ? default_selection_sets() : o.sets;
  std::cout << select_checkpoint(evals, sets) << "\n";
  return 0;
}

struct EvaluateOpts {
  std::string gold, predictions, annotations, csv;
  std::string mode = "strict";
};

int run_evaluate(const EvaluateOpts& o) {
  json out = json::object();
  if (!o.gold.empty()) {
    if (o.predictions.empty()) throw std::invalid_argument("--predictions is required with --gold");
    const auto gold = io::read_squad(o.gold, PassageSource::eval_set, Split::dev, SourceDataset::squad);
    const auto pairs = io::join_predictions(io::read_json(o.predictions), gold.questions);
    const auto s = metrics::dataset_em_f1(pairs);
    out["em"] = s.em_pct;
    out["f1"] = s.f1_pct;
  }
  if (!o.annotations.empty()) {
    const auto mode = o.mode == "inclusive" ? metrics::VmerMode::inclusive : metrics::VmerMode::strict;
    const auto records = io::read_jsonl_as<AnnotationRecord>(o.annotations);
    const auto stats = metrics::annotator_stats(records, mode);
    out["vmer"] = metrics::vmer(records, mode);
    out["mvmer"] = metrics::mvmer(stats);
    out["n_annotators"] = stats.size();
    if (!o.csv.empty()) std::ofstream(o.csv) << io::annotator_stats_csv(stats);
  }
  if (out.empty()) throw std::invalid_argument("nothing to evaluate: pass --gold or --annotations");
  print_json(out);
  return 0;
}

struct PipelineOpts {
  std::string config, output_dir, passages, source, selection, filter_method, head;
  std::optional<std::uint64_t> seed;
  bool no_decontamination = false;
  std::vector<std::string> eval;
};

PipelineConfig load_pipeline_config(const PipelineOpts& o) {
  PipelineConfig cfg;
  if (!o.config.empty()) {
    const fs::path base = fs::path(o.config).parent_path();
    cfg = io::read_json(o.config).get<PipelineConfig>();
    cfg.passage_path = resolve_against(base, cfg.passage_path);
    cfg.sal_head_path = resolve_against(base, cfg.sal_head_path);
    cfg.output_dir = resolve_against(base, cfg.output_dir);
    for (auto& p : cfg.decontamination.eval_paths) p = resolve_against(base, p);
  }
  if (!o.passages.empty()) cfg.passage_path = o.passages;
  if (!o.source.empty()) cfg.passage_source = parse_passage_source(o.source);
  if (!o.selection.empty()) cfg.selection_method = parse_selection_method(o.selection);
  if (!o.filter_method.empty()) cfg.filter_method = parse_filter_method(o.filter_method);
  if (!o.head.empty()) cfg.sal_head_path = o.head;
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (o.seed) cfg.seed = *o.seed;
  if (o.no_decontamination) cfg.decontamination.enabled = false;
  for (const auto& e : o.eval) cfg.decontamination.eval_paths.emplace_back(e);
  return cfg;
}

int run_pipeline_cmd(const PipelineOpts& o) {
  const auto cfg = load_pipeline_config(o);
  stubs::RuleAnnotator annotator;
  stubs::ToySpanPredictor predictor;
  stubs::TemplateGenerator generator;
  auto owned = stubs::make_toy_ensemble(cfg.filter_config.n_members);
  PipelineBackends backends;
  backends.annotator = &annotator;
  backends.span_predictor = &predictor;
  backends.generator = &generator;
  for (auto& m : owned) backends.ensemble.push_back(m.get());
  const auto result = run_pipeline(cfg, backends);
  print_json({{"dataset", result.dataset_path.string()},
              {"manifest", result.manifest_path.string()},
              {"examples", result.examples.size()}});
  return 0;
}

struct ServeOpts {
  std::string config, passages, host = "127.0.0.1", log_dir;
  int port = 8080;
  std::vector<std::string> arms;
};

httplib::Server* g_server = nullptr;

int run_serve(const ServeOpts& o) {
  eval::ServiceConfig cfg;
  std::string passages_path = o.passages;
  if (!o.config.empty()) {
    const auto j = io::read_json(o.config);
    const fs::path base = fs::path(o.config).parent_path();
    cfg.arms = j.value("arms", cfg.arms);
    cfg.fool_threshold = j.value("fool_threshold", cfg.fool_threshold);
    cfg.session_questions = j.value("session_questions", cfg.session_questions);
    cfg.lifetime_cap = j.value("lifetime_cap", cfg.lifetime_cap);
    cfg.model_timeout = std::chrono::milliseconds(j.value("model_timeout_ms", 10000));
    cfg.snapshot_every = j.value("snapshot_every", cfg.snapshot_every);
    cfg.token_salt = j.value("token_salt", cfg.token_salt);
    cfg.show_model_answer_to_validators =
        j.value("show_model_answer_to_validators", cfg.show_model_answer_to_validators);
    if (j.contains("log_dir")) cfg.log_dir = resolve_against(base, j["log_dir"].get<std::string>());
    if (passages_path.empty() && j.contains("passages"))
      passages_path = resolve_against(base, j["passages"].get<std::string>()).string();
  }
  if (!o.arms.empty()) cfg.arms = o.arms;
  if (cfg.arms.empty()) cfg.arms = {"model-a", "model-b", "model-c", "model-d"};
  if (!o.log_dir.empty()) cfg.log_dir = o.log_dir;
  if (passages_path.empty()) throw std::invalid_argument("--passages is required");

  // Each arm is served by a toy model; real deployments link their own backends.
  std::vector<std::unique_ptr<QaModel>> owned;
  std::map<std::string, QaModel*> models;
  for (std::size_t i = 0; i < cfg.arms.size(); ++i) {
    owned.push_back(std::make_unique<stubs::ToyQaModel>(static_cast<int>(i)));
    models[cfg.arms[i]] = owned.back().get();
  }
  eval::EvalService service(cfg, models, io::read_passages(passages_path, PassageSource::eval_set));
  httplib::Server server;
  eval::register_routes(server, service);
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::cerr << "listening on " << o.host << ":" << o.port << "\n";
  if (!server.listen(o.host, o.port)) throw std::runtime_error("cannot listen on port " + std::to_string(o.port));
  service.snapshot();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic adversarial QA data pipeline"};
  app.require_subcommand(1);
  int rc = 0;

  DecontaminateOpts dec;
  auto* c_dec = app.add_subcommand("decontaminate", "Drop passages sharing n-grams with evaluation data");
  c_dec->add_option("--candidates", dec.candidates, "Candidate passages (JSONL or SQuAD JSON)")->required();
  c_dec->add_option("--eval", dec.eval, "Evaluation corpora")->required();
  c_dec->add_option("--out", dec.out, "Kept passages JSONL")->required();
  c_dec->add_option("--dropped-out", dec.dropped_out, "Dropped passages JSONL");
  c_dec->add_option("--report", dec.report, "Overlap report JSON");
  c_dec->add_option("-n", dec.n, "Shingle size")->capture_default_str();
  c_dec->add_option("--source", dec.source, "Candidate source tag")->capture_default_str();
  c_dec->callback([&] { rc = run_decontaminate(dec); });

  AlignOpts al;
  auto* c_al = app.add_subcommand("align", "Merge answer annotations of several datasets per passage");
  c_al->add_option("--dataset", al.datasets, "tag=path, tag in squad|aqa_bidaf|aqa_bert|aqa_roberta")->required();
  c_al->add_option("--split", al.split, "Split of the inputs")->capture_default_str();
  c_al->add_option("--out-dir", al.out_dir, "Output directory")->required();
  c_al->callback([&] { rc = run_align(al); });

  SelectOpts sel;
  auto* c_sel = app.add_subcommand("select-answers", "Select answer candidates");
  c_sel->add_option("--passages", sel.passages)->required();
  c_sel->add_option("--method", sel.method)->capture_default_str();
  c_sel->add_option("--out", sel.out)->required();
  c_sel->add_option("--head", sel.head, "Trained SAL head JSON");
  c_sel->add_option("-k", sel.k, "Span-extraction top-k")->capture_default_str();
  c_sel->add_option("--threshold", sel.threshold, "SAL probability threshold")->capture_default_str();
  c_sel->callback([&] { rc = run_select(sel); });

  TrainSalOpts ts;
  auto* c_ts = app.add_subcommand("train-sal", "Train a SAL head on aligned answers");
  c_ts->add_option("--aligned", ts.aligned)->required();
  c_ts->add_option("--out", ts.out)->required();
  c_ts->add_option("--epochs", ts.epochs)->capture_default_str();
  c_ts->add_option("--lr", ts.lr)->capture_default_str();
  c_ts->add_option("--seed", ts.seed)->capture_default_str();
  c_ts->callback([&] { rc = run_train_sal(ts); });

  GenerateOpts gen;
  auto* c_gen = app.add_subcommand("generate", "Generate questions for answer candidates");
  c_gen->add_option("--candidates", gen.candidates)->required();
  c_gen->add_option("--passages", gen.passages)->required();
  c_gen->add_option("--out", gen.out)->required();
  c_gen->add_option("--strategy", gen.strategy)->capture_default_str();
  c_gen->add_option("--beam-size", gen.decode.beam_size)->capture_default_str();
  c_gen->add_option("--nbest", gen.decode.nbest)->capture_default_str();
  c_gen->add_option("--beam-strength", gen.decode.beam_strength)->capture_default_str();
  c_gen->add_option("--top-p", gen.decode.top_p)->capture_default_str();
  c_gen->add_option("--seed", gen.decode.seed)->capture_default_str();
  c_gen->add_flag("--grid", gen.grid, "Sweep the full decoding grid");
  c_gen->callback([&] { rc = run_generate(gen); });

  FilterOpts fil;
  auto* c_fil = app.add_subcommand("filter", "Filter and relabel generated examples");
  c_fil->add_option("--examples", fil.examples)->required();
  c_fil->add_option("--passages", fil.passages)->required();
  c_fil->add_option("--out", fil.out)->required();
  c_fil->add_option("--method", fil.method)->capture_default_str();
  c_fil->add_option("--verdicts", fil.verdicts, "Precomputed ensemble verdicts JSONL");
  c_fil->add_option("--manifest", fil.manifest);
  c_fil->add_option("--answer-conf-thresh", fil.config.answer_conf_thresh)->capture_default_str();
  c_fil->add_option("--gen-conf-thresh", fil.config.gen_conf_thresh)->capture_default_str();
  c_fil->add_option("--roundtrip-min-correct", fil.config.roundtrip_min_correct)->capture_default_str();
  c_fil->add_option("--keep-at", fil.config.selftrain_keep_at)->capture_default_str();
  c_fil->add_option("--relabel-at", fil.config.selftrain_relabel_at)->capture_default_str();
  c_fil->add_option("--members", fil.config.n_members)->capture_default_str();
  c_fil->callback([&] { rc = run_filter(fil); });

  ScheduleOpts sch;
  auto* c_sch = app.add_subcommand("build-schedule", "Build a fine-tuning schedule");
  c_sch->add_option("--synthetic", sch.synthetic, "name=path")->required();
  c_sch->add_option("--human", sch.human, "name=path")->required();
  c_sch->add_option("--mode", sch.mode)->capture_default_str();
  c_sch->add_option("--seed", sch.seed)->capture_default_str();
  c_sch->add_option("--out", sch.out);
  c_sch->callback([&] { rc = run_schedule(sch); });

  CheckpointOpts ck;
  auto* c_ck = app.add_subcommand("select-checkpoint", "Pick the checkpoint with the best mean F1");
  c_ck->add_option("--evals", ck.evals, "JSON: {checkpoint: {set: f1}} or [{checkpoint, f1}]")->required();
  c_ck->add_option("--sets", ck.sets, "Validation sets to average");
  c_ck->callback([&] { rc = run_select_checkpoint(ck); });

  EvaluateOpts ev;
  auto* c_ev = app.add_subcommand("evaluate", "EM/F1 of predictions, or vMER of an annotation log");
  c_ev->add_option("--gold", ev.gold, "SQuAD-format gold file");
  c_ev->add_option("--predictions", ev.predictions, "JSON object id -> answer");
  c_ev->add_option("--annotations", ev.annotations, "Annotation record JSONL");
  c_ev->add_option("--csv", ev.csv, "Per-annotator CSV output");
  c_ev->add_option("--vmer-mode", ev.mode)->check(CLI::IsMember({"strict", "inclusive"}))->capture_default_str();
  c_ev->callback([&] { rc = run_evaluate(ev); });

  PipelineOpts pl;
  std::uint64_t pl_seed = 0;
  auto* c_pl = app.add_subcommand("pipeline", "Run the full generation pipeline with stub backends");
  c_pl->add_option("--config", pl.config, "Pipeline JSON config");
  c_pl->add_option("--passages", pl.passages);
  c_pl->add_option("--source", pl.source);
  c_pl->add_option("--selection-method", pl.selection);
  c_pl->add_option("--filter-method", pl.filter_method);
  c_pl->add_option("--sal-head", pl.head);
  c_pl->add_option("--eval", pl.eval, "Evaluation corpora for decontamination");
  c_pl->add_flag("--no-decontamination", pl.no_decontamination);
  c_pl->add_option("--output-dir", pl.output_dir);
  auto* seed_opt = c_pl->add_option("--seed", pl_seed);
  c_pl->callback([&] {
    if (seed_opt->count() > 0) pl.seed = pl_seed;
    rc = run_pipeline_cmd(pl);
  });

  ServeOpts sv;
  auto* c_sv = app.add_subcommand("serve-eval", "Serve the adversarial evaluation API");
  c_sv->add_option("--config", sv.config, "Service JSON config");
  c_sv->add_option("--passages", sv.passages);
  c_sv->add_option("--arm", sv.arms, "Model id of an arm (repeatable)");
  c_sv->add_option("--log-dir", sv.log_dir);
  c_sv->add_option("--host", sv.host)->capture_default_str();
  c_sv->add_option("--port", sv.port)->capture_default_str();
  c_sv->callback([&] { rc = run_serve(sv); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
