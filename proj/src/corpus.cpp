// SPDX-License-Identifier: Apache-2.0
#include "synqa/corpus.hpp"

#include <stdexcept>

#include "synqa/hash.hpp"
#include "synqa/text.hpp"

namespace synqa {

std::string_view to_string(PassageSource s) {
  switch (s) {
    case PassageSource::squad_train: return "squad_train";
    case PassageSource::external: return "external";
    case PassageSource::eval_set: return "eval_set";
  }
  return "external";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
    case Split::none: return "none";
  }
  return "none";
}

PassageSource parse_passage_source(std::string_view s) {
  if (s == "squad_train") return PassageSource::squad_train;
  if (s == "external") return PassageSource::external;
  if (s == "eval_set") return PassageSource::eval_set;
  throw std::invalid_argument("unknown passage source '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "dev" || s == "validation") return Split::dev;
  if (s == "test") return Split::test;
  if (s == "none" || s.empty()) return Split::none;
  throw std::invalid_argument("unknown split '" + std::string(s) + "'");
}

std::string passage_id_for(std::string_view text) { return sha256_hex(text).substr(0, 16); }

std::string normalize_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char32_t cp : text::decode_utf8(raw)) {
    if (!text::is_alnum(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    const char32_t lower = text::to_lower(cp);
    // Simple case mappings can in principle leave the alnum class; such
    // code points are kept unmapped so normalization stays idempotent.
    text::append_utf8(out, text::is_alnum(lower) ? lower : cp);
  }
  return out;
}

std::vector<std::string> word_windows(std::string_view normalized, int n) {
  if (n < 1) throw std::invalid_argument("shingle size must be >= 1, got " + std::to_string(n));
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < normalized.size(); ++i)
    if (i == 0 || normalized[i - 1] == ' ') starts.push_back(i);
  std::vector<std::string> windows;
  const auto words = starts.size();
  if (words < static_cast<std::size_t>(n)) return windows;
  windows.reserve(words - n + 1);
  for (std::size_t w = 0; w + n <= words; ++w) {
    const std::size_t begin = starts[w];
    const std::size_t end = (w + n < words) ? starts[w + n] - 1 : normalized.size();
    windows.emplace_back(normalized.substr(begin, end - begin));
  }
  return windows;
}

ShingleSet build_shingles(const Passage& passage, int n) {
  ShingleSet set;
  set.passage_id = passage.id;
  set.n = n;
  for (auto& w : word_windows(normalize_text(passage.text), n)) set.shingles.insert(std::move(w));
  return set;
}

ContaminationIndex::ContaminationIndex(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("shingle size must be >= 1, got " + std::to_string(n));
}

void ContaminationIndex::add_text(std::string_view raw_text) {
  for (auto& w : word_windows(normalize_text(raw_text), n_)) shingles_.insert(std::move(w));
}

bool ContaminationIndex::overlaps(const Passage& candidate) const {
  // unordered_set lookups compare full strings, so a hash collision can
  // never turn into a false drop or a false keep.
  for (const auto& w : word_windows(normalize_text(candidate.text), n_))
    if (shingles_.contains(w)) return true;
  return false;
}

OverlapReport& OverlapReport::operator+=(const OverlapReport& other) {
  total += other.total;
  dropped += other.dropped;
  dropped_fraction = total == 0 ? 0.0 : static_cast<double>(dropped) / static_cast<double>(total);
  return *this;
}

DecontaminationResult decontaminate(const std::vector<Passage>& candidates,
                                    const ContaminationIndex& index) {
  DecontaminationResult result;
  result.report.n = index.n();
  for (const auto& p : candidates) {
    if (index.overlaps(p))
      result.dropped.push_back(p);
    else
      result.kept.push_back(p);
  }
  result.report.total = candidates.size();
  result.report.dropped = result.dropped.size();
  result.report.dropped_fraction =
      candidates.empty() ? 0.0
                         : static_cast<double>(result.dropped.size()) /
                               static_cast<double>(candidates.size());
  return result;
}

DecontaminationResult decontaminate(const std::vector<Passage>& candidates,
                                    const std::vector<Passage>& eval_corpora, int n) {
  ContaminationIndex index(n);
  for (const auto& p : eval_corpora) index.add_passage(p);
  return decontaminate(candidates, index);
}

}  // namespace synqa
