// SPDX-License-Identifier: Apache-2.0
#include "synqa/span.hpp"

#include <stdexcept>

#include "synqa/text.hpp"

namespace synqa {

std::string_view to_string(SourceDataset d) {
  switch (d) {
    case SourceDataset::squad: return "squad";
    case SourceDataset::aqa_bidaf: return "aqa_bidaf";
    case SourceDataset::aqa_bert: return "aqa_bert";
    case SourceDataset::aqa_roberta: return "aqa_roberta";
    case SourceDataset::synthetic: return "synthetic";
  }
  return "synthetic";
}

SourceDataset parse_source_dataset(std::string_view s) {
  if (s == "squad") return SourceDataset::squad;
  if (s == "aqa_bidaf") return SourceDataset::aqa_bidaf;
  if (s == "aqa_bert") return SourceDataset::aqa_bert;
  if (s == "aqa_roberta") return SourceDataset::aqa_roberta;
  if (s == "synthetic") return SourceDataset::synthetic;
  throw std::invalid_argument("unknown source dataset '" + std::string(s) + "'");
}

AnswerSpan make_span(std::string_view passage_id, std::string_view passage_text,
                     std::size_t char_start, std::size_t char_end, SourceDataset source) {
  const auto len = text::length(passage_text);
  if (char_start >= char_end || char_end > len)
    throw std::invalid_argument("span [" + std::to_string(char_start) + ", " +
                                std::to_string(char_end) + ") invalid for passage '" +
                                std::string(passage_id) + "' of length " + std::to_string(len));
  return AnswerSpan{std::string(passage_id), char_start, char_end,
                    text::slice(passage_text, char_start, char_end), source};
}

bool span_matches(const AnswerSpan& span, std::string_view passage_text) {
  if (span.char_start >= span.char_end) return false;
  if (span.char_end > text::length(passage_text)) return false;
  return text::slice(passage_text, span.char_start, span.char_end) == span.text;
}

bool locate_span(std::string_view passage_id, std::string_view passage_text,
                 std::string_view answer, AnswerSpan& out, SourceDataset source) {
  if (answer.empty()) return false;
  const auto start = text::find_codepoint(passage_text, answer);
  if (start == std::string_view::npos) return false;
  out = AnswerSpan{std::string(passage_id), start, start + text::length(answer),
                   std::string(answer), source};
  return true;
}

}  // namespace synqa
