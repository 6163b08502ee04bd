// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace synqa {

enum class PassageSource { squad_train, external, eval_set };
enum class Split { train, dev, test, none };

std::string_view to_string(PassageSource s);
std::string_view to_string(Split s);
PassageSource parse_passage_source(std::string_view s);
Split parse_split(std::string_view s);

struct Passage {
  std::string id;
  std::string title;
  std::string text;
  PassageSource source = PassageSource::external;
  Split split = Split::none;
};

/// Stable identifier for a passage derived from its text, so the same
/// paragraph shipped by different datasets maps to one id.
std::string passage_id_for(std::string_view text);

/// Lower-cased alphanumeric words joined by single spaces. Every code point
/// that is not a Unicode letter or decimal digit acts as a word separator.
std::string normalize_text(std::string_view text);

constexpr int kDefaultShingleSize = 8;

struct ShingleSet {
  std::string passage_id;
  int n = kDefaultShingleSize;
  // Each shingle is n normalized words joined by a single space.
  std::unordered_set<std::string> shingles;
};

ShingleSet build_shingles(const Passage& passage, int n = kDefaultShingleSize);

/// Word windows of already-normalized text, in order of occurrence (may repeat).
std::vector<std::string> word_windows(std::string_view normalized, int n);

/// Shingles of every evaluation text that candidates are checked against.
/// Passages are the default stream; arbitrary extra text (questions, answers)
/// can be added through add_text.
class ContaminationIndex {
 public:
  explicit ContaminationIndex(int n = kDefaultShingleSize);

  void add_passage(const Passage& passage) { add_text(passage.text); }
  void add_text(std::string_view raw_text);

  int n() const { return n_; }
  std::size_t size() const { return shingles_.size(); }
  bool overlaps(const Passage& candidate) const;

 private:
  int n_;
  std::unordered_set<std::string> shingles_;
};

struct OverlapReport {
  int n = kDefaultShingleSize;
  std::size_t total = 0;
  std::size_t dropped = 0;
  double dropped_fraction = 0.0;

  OverlapReport& operator+=(const OverlapReport& other);
};

struct DecontaminationResult {
  std::vector<Passage> kept;
  std::vector<Passage> dropped;
  OverlapReport report;
};

DecontaminationResult decontaminate(const std::vector<Passage>& candidates,
                                    const ContaminationIndex& index);
DecontaminationResult decontaminate(const std::vector<Passage>& candidates,
                                    const std::vector<Passage>& eval_corpora,
                                    int n = kDefaultShingleSize);

}  // namespace synqa
