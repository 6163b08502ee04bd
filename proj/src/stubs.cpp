// SPDX-License-Identifier: Apache-2.0
#include "synqa/stubs.hpp"

#include <unicode/uchar.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "synqa/corpus.hpp"
#include "synqa/qgen.hpp"
#include "synqa/text.hpp"
#include "synqa/tokenize.hpp"

namespace synqa::stubs {

namespace {

enum class Shape { upper, digit, lower, punct };

Shape shape_of(std::u32string_view tok) {
  if (tok.empty()) return Shape::punct;
  const auto c = static_cast<UChar32>(tok.front());
  if (u_isdigit(c)) return Shape::digit;
  if (u_isupper(c) || u_istitle(c)) return Shape::upper;
  if (text::is_alnum(tok.front())) return Shape::lower;
  return Shape::punct;
}

bool ends_with(std::u32string_view s, std::u32string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string pos_tag(std::u32string_view tok) {
  switch (shape_of(tok)) {
    case Shape::digit: return "NUM";
    case Shape::upper: return "PROPN";
    case Shape::punct: return "PUNCT";
    case Shape::lower: break;
  }
  static const std::array<std::u32string_view, 6> kAdj = {U"ous", U"ful", U"ive", U"able", U"ical", U"ern"};
  if (tok.size() > 4)
    for (auto suf : kAdj)
      if (ends_with(tok, suf)) return "ADJ";
  return "NOUN";
}

bool is_clause_break(std::u32string_view tok) {
  return tok.size() == 1 && std::u32string_view(U",;:.!?").find(tok.front()) != std::u32string_view::npos;
}

}  // namespace

LinguisticAnnotation RuleAnnotator::annotate(const Passage& passage) {
  WordTokenizer tokenizer;
  const auto offsets = tokenizer.tokenize(passage.text);
  const auto cps = text::decode_utf8(passage.text);
  LinguisticAnnotation out;
  std::vector<std::u32string_view> toks;
  for (const auto& t : offsets) {
    toks.push_back(std::u32string_view(cps).substr(t.char_start, t.char_end - t.char_start));
    out.tokens.push_back({t.char_start, t.char_end, pos_tag(toks.back())});
  }
  const auto n = offsets.size();

  auto runs = [&](auto member, auto emit) {
    std::size_t i = 0;
    while (i < n) {
      if (!member(i)) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j + 1 < n && member(j + 1)) ++j;
      emit(i, j);
      i = j + 1;
    }
  };
  auto tag = [&](std::size_t i) -> const std::string& { return out.tokens[i].label; };

  runs([&](std::size_t i) { return tag(i) == "PROPN"; },
       [&](std::size_t i, std::size_t j) {
         out.entities.push_back({offsets[i].char_start, offsets[j].char_end, "ENT"});
       });
  runs([&](std::size_t i) { return tag(i) == "NUM"; },
       [&](std::size_t i, std::size_t j) {
         out.entities.push_back({offsets[i].char_start, offsets[j].char_end, "QUANTITY"});
       });
  std::sort(out.entities.begin(), out.entities.end(), [](const auto& a, const auto& b) {
    return std::tie(a.char_start, a.char_end) < std::tie(b.char_start, b.char_end);
  });

  auto nominal = [&](std::size_t i) { return tag(i) == "NOUN" || tag(i) == "PROPN"; };
  runs([&](std::size_t i) { return nominal(i) || tag(i) == "ADJ"; },
       [&](std::size_t i, std::size_t j) {
         // trim trailing adjectives; a chunk must end in a nominal
         while (j > i && !nominal(j)) --j;
         if (nominal(j)) out.noun_chunks.push_back({offsets[i].char_start, offsets[j].char_end, ""});
       });

  runs([&](std::size_t i) { return !is_clause_break(toks[i]); },
       [&](std::size_t i, std::size_t j) {
         if (j > i) out.clauses.push_back({offsets[i].char_start, offsets[j].char_end, ""});
       });
  return out;
}

SpanDistribution ToySpanPredictor::predict(std::string_view context, std::string_view) {
  WordTokenizer tokenizer;
  SpanDistribution d;
  d.tokens = tokenizer.tokenize(context);
  const auto cps = text::decode_utf8(context);
  std::vector<double> start, end;
  for (std::size_t i = 0; i < d.tokens.size(); ++i) {
    const auto& t = d.tokens[i];
    const auto tok = std::u32string_view(cps).substr(t.char_start, t.char_end - t.char_start);
    const auto s = shape_of(tok);
    const bool prev_upper = i > 0 && shape_of(std::u32string_view(cps).substr(
                                         d.tokens[i - 1].char_start,
                                         d.tokens[i - 1].char_end - d.tokens[i - 1].char_start)) ==
                                         Shape::upper;
    double sc = s == Shape::digit ? 2.5 : s == Shape::upper ? (prev_upper ? 0.8 : 2.0) : 0.1;
    if (s == Shape::punct) sc = -2.0;
    start.push_back(sc);
    end.push_back(s == Shape::punct ? -2.0 : (s == Shape::lower ? 0.1 : 1.5));
  }
  auto softmax = [](std::vector<double> v) {
    if (v.empty()) return v;
    const double mx = *std::max_element(v.begin(), v.end());
    double z = 0.0;
    for (double& x : v) z += (x = std::exp(x - mx));
    for (double& x : v) x /= z;
    return v;
  };
  d.start_probs = softmax(std::move(start));
  d.end_probs = softmax(std::move(end));
  return d;
}

namespace {

struct Cue {
  std::string text;      // raw passage slice, empty at passage start
  std::size_t n_words = 0;
};

// Raw slices covering the last w whitespace-separated words before `pos`.
std::vector<Cue> cues_before(const std::u32string& passage, std::size_t pos) {
  std::vector<std::size_t> starts;
  std::size_t i = pos;
  while (i > 0) {
    while (i > 0 && text::is_py_space(passage[i - 1])) --i;
    if (i == 0) break;
    while (i > 0 && !text::is_py_space(passage[i - 1])) --i;
    starts.push_back(i);
  }
  std::size_t end = pos;
  while (end > 0 && text::is_py_space(passage[end - 1])) --end;
  std::vector<Cue> out;
  for (std::size_t w = 0; w < starts.size(); ++w)
    out.push_back({text::encode_utf8(std::u32string_view(passage).substr(starts[w], end - starts[w])),
                   w + 1});
  return out;
}

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string_view::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

std::vector<GeneratedSequence> TemplateGenerator::generate(std::string_view prompt,
                                                           const DecodeConfig& config) {
  const auto parts = qgen::parse_prompt(prompt);
  if (!parts) throw std::runtime_error("template generator: malformed prompt");
  const auto passage = text::decode_utf8(parts->passage);
  const auto at = text::find_codepoint(parts->passage, parts->answer);
  if (at == std::string::npos) throw std::runtime_error("template generator: answer not in passage");

  auto cues = cues_before(passage, at);
  std::vector<GeneratedSequence> out;
  if (cues.empty()) {
    out.push_back({"What does the passage open with?", -0.3});
    return out;
  }
  // preference order of cue lengths: 3, 2, 4, 5, 1, 6, 7, ...
  std::vector<std::size_t> order = {3, 2, 4, 5, 1};
  for (std::size_t w = 6; w <= cues.size(); ++w) order.push_back(w);
  std::vector<Cue> ranked;
  for (auto w : order)
    if (w <= cues.size()) ranked.push_back(cues[w - 1]);

  std::size_t want = static_cast<std::size_t>(std::max(config.beam_size, config.nbest));
  std::size_t offset = 0;
  if (config.strategy == DecodeStrategy::nucleus) {
    want = static_cast<std::size_t>(config.nbest);
    offset = static_cast<std::size_t>(config.seed % ranked.size());
  }
  for (std::size_t r = 0; r < std::min(want, ranked.size()); ++r) {
    const auto& cue = ranked[(r + offset) % ranked.size()];
    double lp = -0.2 - 0.1 * static_cast<double>(r);
    if (count_occurrences(parts->passage, cue.text) > 1) lp -= 1.5;
    out.push_back({"What comes after \"" + cue.text + "\"?", lp});
  }
  return out;
}

int ToyQaModel::max_tokens() const {
  static constexpr std::array<int, 6> kMax = {4, 4, 4, 4, 2, 1};
  return kMax[static_cast<std::size_t>(variant_) % kMax.size()];
}

QaPrediction ToyQaModel::answer(std::string_view context, std::string_view question) {
  std::size_t from = 0;
  const auto open = question.find('"');
  const auto close = question.rfind('"');
  if (open != std::string_view::npos && close > open) {
    const auto cue = question.substr(open + 1, close - open - 1);
    const auto at = text::find_codepoint(context, cue);
    if (at == std::string::npos) return {};
    from = at + text::length(cue);
  }
  WordTokenizer tokenizer;
  const auto tokens = tokenizer.tokenize(context);
  const auto cps = text::decode_utf8(context);
  auto tok_at = [&](std::size_t i) {
    return std::u32string_view(cps).substr(tokens[i].char_start,
                                           tokens[i].char_end - tokens[i].char_start);
  };
  auto first = std::find_if(tokens.begin(), tokens.end(),
                            [&](const TokenOffset& t) { return t.char_start >= from; });
  if (first == tokens.end()) return {};
  const auto i0 = static_cast<std::size_t>(first - tokens.begin());
  const auto shape = shape_of(tok_at(i0));
  if (shape == Shape::punct) return {};
  std::size_t i1 = i0;
  while (i1 + 1 < tokens.size() && static_cast<int>(i1 - i0 + 1) < max_tokens() &&
         shape_of(tok_at(i1 + 1)) == shape)
    ++i1;
  QaPrediction p;
  p.text = text::encode_utf8(std::u32string_view(cps).substr(
      tokens[i0].char_start, tokens[i1].char_end - tokens[i0].char_start));
  p.confidence = 0.5 + 0.08 * static_cast<double>(i1 - i0 + 1) - 0.01 * variant_;
  return p;
}

std::vector<std::unique_ptr<QaModel>> make_toy_ensemble(int n_members) {
  if (n_members < 1) throw std::invalid_argument("ensemble needs at least one member");
  std::vector<std::unique_ptr<QaModel>> out;
  for (int m = 0; m < n_members; ++m) out.push_back(std::make_unique<ToyQaModel>(m));
  return out;
}

}  // namespace synqa::stubs
