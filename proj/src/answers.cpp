// SPDX-License-Identifier: Apache-2.0
#include "synqa/answers.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>
#include <unordered_set>

#include "synqa/metrics.hpp"
#include "synqa/text.hpp"

namespace synqa {

std::string_view to_string(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::pos_extended: return "pos_extended";
    case SelectionMethod::noun_chunks: return "noun_chunks";
    case SelectionMethod::named_entities: return "named_entities";
    case SelectionMethod::span_extraction: return "span_extraction";
    case SelectionMethod::generative: return "generative";
    case SelectionMethod::sal: return "sal";
  }
  return "sal";
}

SelectionMethod parse_selection_method(std::string_view s) {
  if (s == "pos_extended") return SelectionMethod::pos_extended;
  if (s == "noun_chunks") return SelectionMethod::noun_chunks;
  if (s == "named_entities") return SelectionMethod::named_entities;
  if (s == "span_extraction") return SelectionMethod::span_extraction;
  if (s == "generative") return SelectionMethod::generative;
  if (s == "sal") return SelectionMethod::sal;
  throw std::invalid_argument("unknown selection method '" + std::string(s) + "'");
}

std::map<Split, std::vector<AlignedAnswerSet>> align_answer_sets(
    const std::vector<AnswerDataset>& datasets, const std::map<std::string, Passage>& passages) {
  std::map<std::string, AlignedAnswerSet> merged;
  for (const auto& ds : datasets) {
    for (const auto& [pid, spans] : ds.answers) {
      auto pit = passages.find(pid);
      if (pit == passages.end())
        throw std::invalid_argument(std::string(to_string(ds.source)) +
                                    ": answers reference unknown passage '" + pid + "'");
      auto [it, fresh] = merged.try_emplace(pid);
      if (fresh) it->second.passage = pit->second;
      auto& answers = it->second.answers;
      for (const auto& span : spans) {
        if (!span_matches(span, pit->second.text))
          throw std::invalid_argument(std::string(to_string(ds.source)) + ": answer '" +
                                      span.text + "' at [" + std::to_string(span.char_start) +
                                      ", " + std::to_string(span.char_end) +
                                      ") does not match passage '" + pid + "'");
        const bool seen = std::any_of(answers.begin(), answers.end(), [&](const AnswerSpan& a) {
          return a.char_start == span.char_start && a.char_end == span.char_end;
        });
        if (!seen) answers.push_back(span);
      }
    }
  }
  std::map<Split, std::vector<AlignedAnswerSet>> by_split;
  for (auto& [pid, set] : merged) {
    std::sort(set.answers.begin(), set.answers.end(), [](const AnswerSpan& a, const AnswerSpan& b) {
      return std::tie(a.char_start, a.char_end) < std::tie(b.char_start, b.char_end);
    });
    by_split[set.passage.split].push_back(std::move(set));
  }
  return by_split;
}

OverlapStats overlap_stats(const std::vector<AlignedAnswerSet>& sets) {
  if (sets.empty()) throw std::invalid_argument("overlap_stats: no passages");
  std::size_t answers = 0;
  std::size_t overlapping = 0;
  std::size_t passages_with_overlap = 0;
  for (const auto& set : sets) {
    const auto& a = set.answers;
    answers += a.size();
    std::size_t here = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < a.size(); ++j) {
        if (i != j && a[i].char_start < a[j].char_end && a[j].char_start < a[i].char_end) {
          ++here;
          break;
        }
      }
    }
    overlapping += here;
    if (here > 0) ++passages_with_overlap;
  }
  OverlapStats s;
  s.answers_per_passage = static_cast<double>(answers) / static_cast<double>(sets.size());
  s.pct_overlapping_answers =
      answers == 0 ? 0.0 : 100.0 * static_cast<double>(overlapping) / static_cast<double>(answers);
  s.pct_passages_with_overlap =
      100.0 * static_cast<double>(passages_with_overlap) / static_cast<double>(sets.size());
  return s;
}

namespace {

void add_spans(const std::vector<LabelledSpan>& spans, const Passage& passage,
               SelectionMethod method, std::set<std::pair<std::size_t, std::size_t>>& seen,
               std::vector<AnswerCandidate>& out, std::string_view only_label = {}) {
  for (const auto& s : spans) {
    if (!only_label.empty() && s.label != only_label) continue;
    if (!seen.emplace(s.char_start, s.char_end).second) continue;
    out.push_back({make_span(passage.id, passage.text, s.char_start, s.char_end), 1.0, method});
  }
}

}  // namespace

std::vector<AnswerCandidate> select_linguistic_candidates(const Passage& passage,
                                                          LinguisticAnnotator& annotator,
                                                          SelectionMethod mode) {
  LinguisticAnnotation ann;
  try {
    ann = annotator.annotate(passage);
  } catch (const std::exception& e) {
    throw std::runtime_error("annotator failed on passage '" + passage.id + "': " + e.what());
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<AnswerCandidate> out;
  try {
    switch (mode) {
      case SelectionMethod::named_entities:
        add_spans(ann.entities, passage, mode, seen, out);
        break;
      case SelectionMethod::noun_chunks:
        add_spans(ann.noun_chunks, passage, mode, seen, out);
        break;
      case SelectionMethod::pos_extended:
        add_spans(ann.entities, passage, mode, seen, out);
        add_spans(ann.tokens, passage, mode, seen, out, "ADJ");
        add_spans(ann.noun_chunks, passage, mode, seen, out);
        add_spans(ann.tokens, passage, mode, seen, out, "NUM");
        add_spans(ann.tokens, passage, mode, seen, out, "PROPN");
        add_spans(ann.clauses, passage, mode, seen, out);
        break;
      default:
        throw std::invalid_argument("select_linguistic_candidates: '" +
                                    std::string(to_string(mode)) + "' is not a linguistic mode");
    }
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("passage '" + passage.id + "': " + e.what());
  }
  std::sort(out.begin(), out.end(), [](const AnswerCandidate& a, const AnswerCandidate& b) {
    return std::tie(a.span.char_start, a.span.char_end) <
           std::tie(b.span.char_start, b.span.char_end);
  });
  return out;
}

std::vector<AnswerCandidate> select_span_extraction_candidates(const Passage& passage,
                                                               SpanPredictor& predictor,
                                                               std::size_t k,
                                                               std::size_t max_answer_tokens) {
  if (k < 1) throw std::invalid_argument("span extraction: k must be >= 1");
  if (max_answer_tokens < 1) throw std::invalid_argument("span extraction: max length must be >= 1");
  SpanDistribution dist;
  try {
    dist = predictor.predict(passage.text, {});
  } catch (const std::exception& e) {
    throw std::runtime_error("span predictor failed on passage '" + passage.id + "': " + e.what());
  }
  const auto n = dist.tokens.size();
  if (dist.start_probs.size() != n || dist.end_probs.size() != n)
    throw std::runtime_error("span predictor returned mismatched distributions for passage '" +
                             passage.id + "'");

  struct Scored {
    double score;
    std::size_t start;
    std::size_t end;
  };
  std::vector<Scored> spans;
  double mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n && j - i + 1 <= max_answer_tokens; ++j) {
      const double s = dist.start_probs[i] * dist.end_probs[j];
      mass += s;
      spans.push_back({s, i, j});
    }
  }
  std::sort(spans.begin(), spans.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.start != b.start) return a.start < b.start;
    return a.end < b.end;
  });

  const auto text_len = text::length(passage.text);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<AnswerCandidate> out;
  for (const auto& s : spans) {
    if (out.size() == k) break;
    const auto cs = dist.tokens[s.start].char_start;
    const auto ce = dist.tokens[s.end].char_end;
    if (cs >= ce || ce > text_len) continue;
    if (!seen.emplace(cs, ce).second) continue;
    out.push_back({make_span(passage.id, passage.text, cs, ce),
                   mass > 0.0 ? s.score / mass : 0.0, SelectionMethod::span_extraction});
  }
  return out;
}

PrecisionRecall evaluate_candidates(const std::vector<std::string>& predicted,
                                    const std::vector<std::string>& gold) {
  auto unique = [](const std::vector<std::string>& xs) {
    std::unordered_set<std::string> out;
    for (const auto& x : xs) {
      auto n = metrics::normalize_answer(x);
      if (!n.empty()) out.insert(std::move(n));
    }
    return out;
  };
  const auto p = unique(predicted);
  const auto g = unique(gold);
  std::size_t hits = 0;
  for (const auto& x : p) hits += g.contains(x) ? 1 : 0;
  PrecisionRecall r;
  r.precision = p.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(p.size());
  r.recall = g.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(g.size());
  r.f1 = (r.precision + r.recall) == 0.0 ? 0.0
                                          : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

}  // namespace synqa
