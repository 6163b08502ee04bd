// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace synqa {

enum class SourceDataset { squad, aqa_bidaf, aqa_bert, aqa_roberta, synthetic };

std::string_view to_string(SourceDataset d);
SourceDataset parse_source_dataset(std::string_view s);

/// Character span [char_start, char_end) of a passage, in code points.
struct AnswerSpan {
  std::string passage_id;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string text;
  SourceDataset source_dataset = SourceDataset::synthetic;

  bool operator==(const AnswerSpan&) const = default;
};

/// Builds a span over `passage_text`, filling `text` from the slice.
/// Throws std::invalid_argument unless 0 <= start < end <= length(passage_text).
AnswerSpan make_span(std::string_view passage_id, std::string_view passage_text,
                     std::size_t char_start, std::size_t char_end,
                     SourceDataset source = SourceDataset::synthetic);

/// True when the span's offsets are in range and its text equals the slice.
bool span_matches(const AnswerSpan& span, std::string_view passage_text);

/// Locates the first verbatim occurrence of `answer` in the passage.
/// Returns false when the answer is empty or absent.
bool locate_span(std::string_view passage_id, std::string_view passage_text,
                 std::string_view answer, AnswerSpan& out,
                 SourceDataset source = SourceDataset::synthetic);

}  // namespace synqa
