// SPDX-License-Identifier: Apache-2.0
#include "synqa/filters.hpp"

#include <algorithm>
#include <stdexcept>

#include "synqa/metrics.hpp"

namespace synqa {

std::string_view to_string(ExampleState s) {
  switch (s) {
    case ExampleState::raw: return "raw";
    case ExampleState::kept: return "kept";
    case ExampleState::relabelled: return "relabelled";
    case ExampleState::discarded: return "discarded";
  }
  return "raw";
}

ExampleState parse_example_state(std::string_view s) {
  if (s == "raw") return ExampleState::raw;
  if (s == "kept") return ExampleState::kept;
  if (s == "relabelled") return ExampleState::relabelled;
  if (s == "discarded") return ExampleState::discarded;
  throw std::invalid_argument("unknown example state '" + std::string(s) + "'");
}

void check_invariants(const SyntheticExample& ex) {
  switch (ex.state) {
    case ExampleState::relabelled:
      if (!ex.final_answer)
        throw std::logic_error(ex.id + ": relabelled example without final answer");
      if (metrics::normalize_answer(ex.final_answer->text) == metrics::normalize_answer(ex.answer.text))
        throw std::logic_error(ex.id + ": relabelled answer equals the prompted answer");
      break;
    case ExampleState::kept:
      if (!ex.final_answer) throw std::logic_error(ex.id + ": kept example without final answer");
      break;
    case ExampleState::discarded:
      if (ex.final_answer) throw std::logic_error(ex.id + ": discarded example with final answer");
      break;
    case ExampleState::raw:
      break;
  }
}

void FilterConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(answer_conf_thresh) || !unit(gen_conf_thresh))
    throw std::invalid_argument("filter config: thresholds must lie in [0, 1]");
  if (n_members < 1) throw std::invalid_argument("filter config: n_members must be >= 1");
  if (roundtrip_min_correct < 0 || roundtrip_min_correct > n_members)
    throw std::invalid_argument("filter config: roundtrip_min_correct must lie in [0, n_members]");
  if (selftrain_relabel_at < 0 || selftrain_relabel_at > selftrain_keep_at ||
      selftrain_keep_at > n_members)
    throw std::invalid_argument("filter config: need 0 <= relabel_at <= keep_at <= n_members");
}

namespace filters {

namespace {

template <typename Pred>
Partition partition_by(std::span<const SyntheticExample> examples, Pred keep) {
  Partition p;
  for (const auto& ex : examples) (keep(ex) ? p.kept : p.dropped).push_back(ex);
  return p;
}

void check_unit(double thresh, const char* what) {
  if (!(thresh >= 0.0 && thresh <= 1.0))
    throw std::invalid_argument(std::string(what) + ": threshold must lie in [0, 1]");
}

}  // namespace

Partition filter_by_answer_confidence(std::span<const SyntheticExample> examples, double thresh) {
  check_unit(thresh, "filter_by_answer_confidence");
  return partition_by(examples, [&](const SyntheticExample& e) { return e.answer_confidence >= thresh; });
}

Partition filter_by_generator_confidence(std::span<const SyntheticExample> examples, double thresh) {
  check_unit(thresh, "filter_by_generator_confidence");
  return partition_by(examples, [&](const SyntheticExample& e) { return e.gen_score >= thresh; });
}

EnsembleVerdict roundtrip_verdict(const SyntheticExample& example, std::string_view passage_text,
                                  std::span<QaModel* const> ensemble) {
  if (ensemble.empty()) throw std::invalid_argument("roundtrip_verdict: empty ensemble");
  EnsembleVerdict v;
  v.example_id = example.id;
  v.n_members = static_cast<int>(ensemble.size());
  for (std::size_t m = 0; m < ensemble.size(); ++m) {
    QaPrediction pred;
    try {
      pred = ensemble[m]->answer(passage_text, example.question);
    } catch (const std::exception& e) {
      v.diagnostics.push_back("member " + std::to_string(m) + ": " + e.what());
      pred = {};
    }
    if (!pred.text.empty() && metrics::exact_match(pred.text, example.answer.text) == 1) ++v.n_correct;
    v.predictions.push_back(std::move(pred));
  }
  return v;
}

std::vector<std::string> filter_roundtrip(std::span<const EnsembleVerdict> verdicts,
                                          int min_correct) {
  std::vector<std::string> ids;
  for (const auto& v : verdicts) {
    if (min_correct < 0 || min_correct > v.n_members)
      throw std::invalid_argument("filter_roundtrip: min_correct outside [0, n_members]");
    if (v.n_correct >= min_correct) ids.push_back(v.example_id);
  }
  return ids;
}

RelabelDecision self_train_relabel(const EnsembleVerdict& verdict, std::string_view prompted_answer,
                                   int keep_at, int relabel_at) {
  if (verdict.predictions.empty()) throw std::invalid_argument("self_train_relabel: no predictions");
  if (relabel_at < 0 || relabel_at > keep_at || keep_at > static_cast<int>(verdict.predictions.size()))
    throw std::invalid_argument("self_train_relabel: need 0 <= relabel_at <= keep_at <= n_members");

  struct Group {
    std::string key;
    int count = 0;
    double confidence = 0.0;
    std::string surface;
    double best_member_conf = -1.0;
  };
  std::vector<Group> groups;
  for (const auto& p : verdict.predictions) {
    auto key = metrics::normalize_answer(p.text);
    if (key.empty()) continue;
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) { return g.key == key; });
    if (it == groups.end()) {
      groups.push_back({std::move(key), 0, 0.0, {}, -1.0});
      it = std::prev(groups.end());
    }
    ++it->count;
    it->confidence += p.confidence;
    if (p.confidence > it->best_member_conf) {
      it->best_member_conf = p.confidence;
      it->surface = p.text;
    }
  }

  RelabelDecision d;
  if (groups.empty()) return d;
  int m = 0;
  for (const auto& g : groups) m = std::max(m, g.count);
  const Group* winner = nullptr;
  bool tied = false;
  for (const auto& g : groups) {
    if (g.count != m) continue;
    if (winner == nullptr || g.confidence > winner->confidence) {
      winner = &g;
      tied = false;
    } else if (g.confidence == winner->confidence) {
      tied = true;
    }
  }
  d.agreement = m;
  if (tied) return d;

  if (m >= keep_at) {
    d.state = ExampleState::kept;
  } else if (m >= relabel_at) {
    d.state = winner->key == metrics::normalize_answer(prompted_answer) ? ExampleState::kept
                                                                         : ExampleState::relabelled;
  } else {
    return d;
  }
  d.answer = winner->surface;
  return d;
}

SyntheticExample apply_relabel(const SyntheticExample& example, const RelabelDecision& decision,
                               std::string_view passage_text) {
  SyntheticExample out = example;
  out.final_answer.reset();
  out.state = ExampleState::discarded;
  if (decision.state == ExampleState::discarded || !decision.answer) return out;
  if (metrics::normalize_answer(*decision.answer) == metrics::normalize_answer(example.answer.text)) {
    out.state = ExampleState::kept;
    out.final_answer = example.answer;
    return out;
  }
  AnswerSpan span;
  if (!locate_span(example.passage_id, passage_text, *decision.answer, span,
                   SourceDataset::synthetic))
    return out;
  out.state = decision.state;
  out.final_answer = span;
  return out;
}

namespace {

FilterResult relabel_all(std::span<const SyntheticExample> examples,
                         const std::map<std::string, EnsembleVerdict>& verdicts,
                         const std::map<std::string, std::string>& passage_texts,
                         const FilterConfig& config, FilterResult result) {
  StageCounts st{"self_training", examples.size(), 0, 0, 0};
  for (const auto& ex : examples) {
    auto vit = verdicts.find(ex.id);
    if (vit == verdicts.end())
      throw std::invalid_argument("no ensemble verdict for example '" + ex.id + "'");
    auto pit = passage_texts.find(ex.passage_id);
    if (pit == passage_texts.end())
      throw std::invalid_argument("example '" + ex.id + "' references unknown passage '" +
                                  ex.passage_id + "'");
    const auto decision = self_train_relabel(vit->second, ex.answer.text, config.selftrain_keep_at,
                                             config.selftrain_relabel_at);
    auto out = apply_relabel(ex, decision, pit->second);
    switch (out.state) {
      case ExampleState::kept: ++st.kept; break;
      case ExampleState::relabelled: ++st.relabelled; break;
      default: ++st.discarded; break;
    }
    if (out.state == ExampleState::kept || out.state == ExampleState::relabelled)
      result.examples.push_back(std::move(out));
  }
  result.stages.push_back(st);
  return result;
}

}  // namespace

FilterResult combined_filter(std::span<const SyntheticExample> examples,
                             const std::map<std::string, EnsembleVerdict>& verdicts,
                             const std::map<std::string, std::string>& passage_texts,
                             const FilterConfig& config) {
  config.validate();
  auto part = filter_by_answer_confidence(examples, config.answer_conf_thresh);
  FilterResult result;
  result.stages.push_back({"answer_confidence", examples.size(), part.kept.size(), 0, part.dropped.size()});
  return relabel_all(part.kept, verdicts, passage_texts, config, std::move(result));
}

FilterResult self_training_filter(std::span<const SyntheticExample> examples,
                                  const std::map<std::string, EnsembleVerdict>& verdicts,
                                  const std::map<std::string, std::string>& passage_texts,
                                  const FilterConfig& config) {
  config.validate();
  return relabel_all(examples, verdicts, passage_texts, config, {});
}

double influence_score(std::span<const double> train_grad,
                       const std::vector<std::vector<double>>& val_grads, HessianMode mode,
                       const InverseHvp& inverse_hvp) {
  if (val_grads.empty()) throw std::invalid_argument("influence_score: no validation gradients");
  const auto dim = train_grad.size();
  std::vector<double> mean(dim, 0.0);
  for (const auto& g : val_grads) {
    if (g.size() != dim)
      throw std::invalid_argument("influence_score: gradient dimension mismatch (" +
                                  std::to_string(g.size()) + " vs " + std::to_string(dim) + ")");
    for (std::size_t i = 0; i < dim; ++i) mean[i] += g[i];
  }
  for (double& x : mean) x /= static_cast<double>(val_grads.size());
  if (mode == HessianMode::lissa) {
    if (!inverse_hvp) throw std::invalid_argument("influence_score: lissa mode needs an inverse HVP");
    mean = inverse_hvp(mean);
    if (mean.size() != dim) throw std::invalid_argument("influence_score: inverse HVP changed dimension");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < dim; ++i) dot += train_grad[i] * mean[i];
  return -dot;
}

std::vector<double> lissa_inverse_hvp(const Hvp& hvp, std::span<const double> v, double damping,
                                      double scale, int iterations) {
  if (!(scale > 0.0)) throw std::invalid_argument("lissa: scale must be > 0");
  if (damping < 0.0 || damping >= 1.0) throw std::invalid_argument("lissa: damping must lie in [0, 1)");
  std::vector<double> h(v.begin(), v.end());
  for (int t = 0; t < iterations; ++t) {
    const auto hv = hvp(h);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = v[i] + (1.0 - damping) * h[i] - hv[i] / scale;
  }
  for (double& x : h) x /= scale;
  return h;
}

Partition filter_by_influence(std::span<const SyntheticExample> examples,
                              const std::map<std::string, double>& scores) {
  Partition p;
  for (const auto& ex : examples) {
    auto it = scores.find(ex.id);
    if (it == scores.end())
      throw std::invalid_argument("no influence score for example '" + ex.id + "'");
    (it->second <= 0.0 ? p.kept : p.dropped).push_back(ex);
  }
  return p;
}

}  // namespace filters
}  // namespace synqa
