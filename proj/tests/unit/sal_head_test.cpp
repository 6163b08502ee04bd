// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "synqa/sal_head.hpp"
#include "synqa/text.hpp"

using namespace synqa;
using namespace synqa::sal;

namespace {

AlignedAnswerSet example(const std::string& text, const std::vector<std::string>& answers) {
  AlignedAnswerSet s;
  s.passage.text = text;
  s.passage.id = passage_id_for(text);
  for (const auto& a : answers) {
    const auto at = text::find_codepoint(text, a);
    s.answers.push_back(make_span(s.passage.id, text, at, at + text::length(a), SourceDataset::squad));
  }
  return s;
}

std::vector<AlignedAnswerSet> toy_data() {
  return {example("The Denver Broncos won in 2016 at Santa Clara.", {"Denver Broncos", "2016", "Santa Clara"}),
          example("Chopin was born in 1810 near Warsaw.", {"Chopin", "1810", "Warsaw"}),
          example("The Nile flows north through Egypt for 6650 km.", {"Nile", "Egypt", "6650 km"})};
}

}  // namespace

TEST(GoldMatrix, MapsTokenAlignedAnswers) {
  const std::string text = "ab cd ef";
  WordTokenizer tok;
  const auto toks = tok.tokenize(text);
  const auto mask = sal_mask(toks.size(), 2, {0, toks.size()});
  std::size_t bad = 0;
  const auto g = gold_matrix(toks,
                             {make_span("p", text, 0, 5), make_span("p", text, 1, 2), make_span("p", text, 0, 8)},
                             mask, &bad);
  EXPECT_TRUE(g(0, 1));
  EXPECT_EQ(g.count(), 1u);
  EXPECT_EQ(bad, 2u);
}

TEST(SalHeadTraining, LossDecreases) {
  SalHead head;
  const auto report = train_head(head, toy_data(), 30, 0.05);
  ASSERT_EQ(report.epoch_loss.size(), 30u);
  EXPECT_LT(report.epoch_loss.back(), report.epoch_loss.front() * 0.5);
  EXPECT_EQ(report.unmappable_answers, 0u);
}

TEST(SalHeadTraining, JsonRoundTrip) {
  SalHead head;
  train_head(head, toy_data(), 3, 0.05);
  const auto copy = SalHead::from_json(head.to_json());
  EXPECT_EQ(copy.to_json(), head.to_json());
  const auto p = toy_data()[0].passage;
  const auto a = select_sal_candidates(head, p).candidates;
  const auto b = select_sal_candidates(copy, p).candidates;
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].span, b[i].span);
    EXPECT_DOUBLE_EQ(a[i].confidence, b[i].confidence);
  }
}

TEST(SalHeadTraining, LearnsTrainingAnswers) {
  SalHead head;
  train_head(head, toy_data(), 60, 0.05);
  const auto data = toy_data();
  const auto got = select_sal_candidates(head, data[0].passage).candidates;
  bool found = false;
  for (const auto& c : got) found = found || c.span.text == "Denver Broncos";
  EXPECT_TRUE(found);
}
