// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "synqa/filters.hpp"
#include "synqa/metrics.hpp"

using namespace synqa;
using namespace synqa::filters;

namespace {

const std::string kText = "The AFC champion Denver Broncos defeated the Carolina Panthers in Santa Clara.";

SyntheticExample example(const std::string& id, const std::string& answer, double conf = 1.0,
                         double gen = 1.0) {
  SyntheticExample ex;
  ex.id = id;
  ex.passage_id = "p";
  AnswerSpan s;
  locate_span("p", kText, answer, s);
  ex.answer = s;
  ex.question = "Q " + id;
  ex.answer_confidence = conf;
  ex.gen_score = gen;
  return ex;
}

class Echo : public QaModel {
 public:
  explicit Echo(std::string a, double c = 0.9) : a_(std::move(a)), c_(c) {}
  QaPrediction answer(std::string_view, std::string_view) override { return {a_, c_}; }

 private:
  std::string a_;
  double c_;
};

class Broken : public QaModel {
 public:
  QaPrediction answer(std::string_view, std::string_view) override { throw std::runtime_error("oom"); }
};

EnsembleVerdict verdict(const std::string& id, std::vector<QaPrediction> preds) {
  EnsembleVerdict v;
  v.example_id = id;
  v.n_members = static_cast<int>(preds.size());
  v.predictions = std::move(preds);
  return v;
}

std::vector<QaPrediction> uniform(std::initializer_list<const char*> texts) {
  std::vector<QaPrediction> out;
  for (const auto* t : texts) out.push_back({t, 0.5});
  return out;
}

}  // namespace

TEST(ConfidenceFilters, Examples) {
  std::vector<SyntheticExample> ex{example("a", "Denver", 0.4, 0.1), example("b", "Denver", 0.6, 0.3),
                                   example("c", "Denver", 0.9, 0.5)};
  EXPECT_EQ(filter_by_answer_confidence(ex, 0.6).kept.size(), 2u);
  EXPECT_EQ(filter_by_answer_confidence(ex, 0.0).kept.size(), 3u);
  EXPECT_EQ(filter_by_answer_confidence(ex, 1.0).kept.size(), 0u);
  EXPECT_EQ(filter_by_generator_confidence(ex, 0.0).kept.size(), 3u);
  const auto g = filter_by_generator_confidence(std::span(ex).first(2), 0.3);
  ASSERT_EQ(g.kept.size(), 1u);
  EXPECT_EQ(g.kept[0].id, "b");
  EXPECT_EQ(g.dropped[0].id, "a");
}

TEST(Roundtrip, NormalizedMatchCounting) {
  const auto ex = example("x", "Denver Broncos");
  Echo a("Broncos"), b("Denver Broncos"), c("denver broncos.");
  std::vector<QaModel*> members{&a, &b, &c};
  const auto v = roundtrip_verdict(ex, kText, members);
  EXPECT_EQ(v.n_members, 3);
  EXPECT_EQ(v.n_correct, 2);
  ASSERT_EQ(v.predictions.size(), 3u);
  EXPECT_EQ(v.predictions[0].text, "Broncos");

  std::vector<QaModel*> echo{&b, &b, &b};
  EXPECT_EQ(roundtrip_verdict(ex, kText, echo).n_correct, 3);
  std::vector<QaModel*> none{&a, &a};
  EXPECT_EQ(roundtrip_verdict(ex, kText, none).n_correct, 0);
}

TEST(Roundtrip, MemberFailureCountsAsIncorrect) {
  const auto ex = example("x", "Denver Broncos");
  Echo b("Denver Broncos");
  Broken broken;
  std::vector<QaModel*> members{&b, &broken};
  const auto v = roundtrip_verdict(ex, kText, members);
  EXPECT_EQ(v.n_members, 2);
  EXPECT_EQ(v.n_correct, 1);
  EXPECT_EQ(v.diagnostics.size(), 1u);
}

TEST(Roundtrip, FilterByMinCorrect) {
  std::vector<EnsembleVerdict> vs(3);
  for (auto& v : vs) v.n_members = 6;
  vs[0].example_id = "a";
  vs[0].n_correct = 5;
  vs[1].example_id = "b";
  vs[1].n_correct = 6;
  vs[2].example_id = "c";
  vs[2].n_correct = 0;
  EXPECT_EQ(filter_roundtrip(vs, 6), (std::vector<std::string>{"b"}));
  EXPECT_EQ(filter_roundtrip(vs, 0), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(SelfTrain, Examples) {
  auto d = self_train_relabel(verdict("x", uniform({"X", "X", "X", "X", "X", "X"})), "Denver");
  EXPECT_EQ(d.state, ExampleState::kept);
  EXPECT_EQ(d.answer, "X");
  EXPECT_EQ(d.agreement, 6);

  d = self_train_relabel(verdict("x", uniform({"Y", "X", "X", "X", "X", "X"})), "Denver");
  EXPECT_EQ(d.state, ExampleState::kept);
  EXPECT_EQ(d.answer, "X");

  d = self_train_relabel(verdict("x", uniform({"X", "Y", "X", "W", "Y", "X"})), "Denver");
  EXPECT_EQ(d.state, ExampleState::relabelled);
  EXPECT_EQ(d.answer, "X");

  d = self_train_relabel(verdict("x", uniform({"X", "Y", "X", "W", "Y", "X"})), "x!");
  EXPECT_EQ(d.state, ExampleState::kept);

  d = self_train_relabel(verdict("x", uniform({"X", "Y", "W", "D", "E", "F"})), "Denver");
  EXPECT_EQ(d.state, ExampleState::discarded);
  EXPECT_FALSE(d.answer.has_value());

  EXPECT_THROW(self_train_relabel(verdict("x", {}), "Denver"), std::invalid_argument);
}

TEST(SelfTrain, PluralityTieBreak) {
  auto preds = uniform({"X", "Y", "W", "X", "Y", "W"});
  EXPECT_EQ(self_train_relabel(verdict("x", preds), "Z").state, ExampleState::discarded);
  preds[4].confidence = 0.9;  // B group sums higher
  const auto d = self_train_relabel(verdict("x", preds), "Z");
  EXPECT_EQ(d.state, ExampleState::relabelled);
  EXPECT_EQ(d.answer, "Y");
}

TEST(SelfTrain, MatchesPairwiseOracleOnSmallCases) {
  std::mt19937 rng(17);
  const std::vector<std::string> alphabet = {"Denver", "denver.", "Broncos", "the Panthers", ""};
  for (int t = 0; t < 3000; ++t) {
    std::vector<QaPrediction> preds;
    for (int m = 0; m < 6; ++m) preds.push_back({alphabet[rng() % alphabet.size()], (rng() % 4) / 4.0});
    const int relabel_at = 1 + static_cast<int>(rng() % 6);
    const int keep_at = relabel_at + static_cast<int>(rng() % (7 - relabel_at));
    const std::string prompted = alphabet[rng() % 4];
    const auto got = self_train_relabel(verdict("x", preds), prompted, keep_at, relabel_at);
    const auto want = oracle::self_train(preds, prompted, keep_at, relabel_at);
    ASSERT_EQ(got.state, want.state) << t;
    if (want.answer) {
      ASSERT_EQ(metrics::normalize_answer(*got.answer), metrics::normalize_answer(*want.answer));
    }
  }
}

TEST(ApplyRelabel, LocatesNewAnswer) {
  const auto ex = example("x", "Denver Broncos");
  RelabelDecision d{ExampleState::relabelled, "Carolina Panthers", 3};
  const auto out = apply_relabel(ex, d, kText);
  EXPECT_EQ(out.state, ExampleState::relabelled);
  ASSERT_TRUE(out.final_answer.has_value());
  EXPECT_EQ(out.final_answer->text, "Carolina Panthers");
  EXPECT_TRUE(span_matches(*out.final_answer, kText));
  EXPECT_NO_THROW(check_invariants(out));

  d.answer = "Seattle Seahawks";
  EXPECT_EQ(apply_relabel(ex, d, kText).state, ExampleState::discarded);

  RelabelDecision keep{ExampleState::kept, "denver broncos", 6};
  const auto kept = apply_relabel(ex, keep, kText);
  EXPECT_EQ(kept.state, ExampleState::kept);
  EXPECT_EQ(kept.final_answer, ex.answer);
}

TEST(Combined, EqualsSequentialApplication) {
  std::vector<SyntheticExample> ex{example("e1", "Denver Broncos", 0.4), example("e2", "Denver Broncos", 0.9),
                                   example("e3", "Santa Clara", 0.7), example("e4", "Denver", 0.5),
                                   example("e5", "Carolina Panthers", 0.95)};
  std::map<std::string, EnsembleVerdict> vs{
      {"e1", verdict("e1", uniform({"Denver Broncos", "Denver Broncos", "Denver Broncos", "Denver Broncos",
                                    "Denver Broncos", "Denver Broncos"}))},
      {"e2", verdict("e2", uniform({"Denver Broncos", "Denver Broncos", "Denver Broncos", "Denver Broncos",
                                    "Denver Broncos", "Denver Broncos"}))},
      {"e3", verdict("e3", uniform({"Santa Clara", "Clara", "Denver", "Denver", "Broncos", "x"}))},
      {"e4", verdict("e4", uniform({"a", "b", "c", "d", "e", "f"}))},
      {"e5", verdict("e5", uniform({"Carolina Panthers", "Panthers", "Carolina Panthers", "Carolina Panthers",
                                    "Carolina Panthers", "Carolina Panthers"}))}};
  std::map<std::string, std::string> texts{{"p", kText}};
  FilterConfig cfg;
  const auto combined = combined_filter(ex, vs, texts, cfg);

  const auto survivors = filter_by_answer_confidence(ex, cfg.answer_conf_thresh).kept;
  std::vector<SyntheticExample> sequential;
  for (const auto& s : survivors) {
    const auto out = apply_relabel(s, self_train_relabel(vs.at(s.id), s.answer.text), kText);
    if (out.state != ExampleState::discarded) sequential.push_back(out);
  }
  ASSERT_EQ(combined.examples.size(), sequential.size());
  for (std::size_t i = 0; i < sequential.size(); ++i) {
    EXPECT_EQ(combined.examples[i].id, sequential[i].id);
    EXPECT_EQ(combined.examples[i].state, sequential[i].state);
    EXPECT_EQ(combined.examples[i].final_answer, sequential[i].final_answer);
  }
  // e1 never reaches the vote, e4 disagrees, e3 moves to "Denver"
  ASSERT_EQ(combined.examples.size(), 3u);
  EXPECT_EQ(combined.examples[0].id, "e2");
  EXPECT_EQ(combined.examples[1].state, ExampleState::relabelled);
  EXPECT_EQ(combined.examples[1].final_answer->text, "Denver");
  ASSERT_EQ(combined.stages.size(), 2u);
  EXPECT_EQ(combined.stages[0].input, 5u);
  EXPECT_EQ(combined.stages[0].kept, 4u);
  EXPECT_EQ(combined.stages[1].input, 4u);
  EXPECT_EQ(combined.stages[1].kept + combined.stages[1].relabelled, 3u);

  vs.erase("e2");
  EXPECT_THROW(combined_filter(ex, vs, texts, cfg), std::invalid_argument);
}

TEST(Combined, OutputInvariantsUnderFuzz) {
  std::mt19937 rng(2);
  const std::vector<std::string> answers = {"Denver Broncos", "Denver", "Santa Clara", "Panthers", "Seattle", ""};
  for (int t = 0; t < 200; ++t) {
    std::vector<SyntheticExample> ex;
    std::map<std::string, EnsembleVerdict> vs;
    for (int i = 0; i < 8; ++i) {
      const auto id = "e" + std::to_string(i);
      ex.push_back(example(id, answers[rng() % 4], (rng() % 11) / 10.0));
      std::vector<QaPrediction> preds;
      for (int m = 0; m < 6; ++m) preds.push_back({answers[rng() % answers.size()], (rng() % 10) / 10.0});
      vs[id] = verdict(id, preds);
    }
    const auto r = combined_filter(ex, vs, {{"p", kText}}, FilterConfig{});
    for (const auto& e : r.examples) {
      EXPECT_NO_THROW(check_invariants(e));
      EXPECT_NE(e.state, ExampleState::discarded);
      ASSERT_TRUE(e.final_answer.has_value());
      EXPECT_TRUE(span_matches(*e.final_answer, kText));
    }
  }
}

TEST(Influence, Examples) {
  EXPECT_DOUBLE_EQ(influence_score(std::vector<double>{1, 2}, {{1, 0}, {0, 1}}), -1.5);
  EXPECT_DOUBLE_EQ(influence_score(std::vector<double>{0, 1}, {{1, 0}, {2, 0}}), 0.0);
  EXPECT_DOUBLE_EQ(influence_score(std::vector<double>{3, 4}, {{3, 4}}), -25.0);
  EXPECT_THROW(influence_score(std::vector<double>{1}, {{1, 0}}), std::invalid_argument);
  EXPECT_THROW(influence_score(std::vector<double>{1}, {{1}}, HessianMode::lissa), std::invalid_argument);
}

TEST(Influence, Bilinear) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(4), b(4);
    std::vector<std::vector<double>> val(3, std::vector<double>(4));
    for (auto& x : a) x = nd(rng);
    for (auto& x : b) x = nd(rng);
    for (auto& v : val)
      for (auto& x : v) x = nd(rng);
    const double alpha = nd(rng), beta = nd(rng);
    std::vector<double> mix(4);
    for (int i = 0; i < 4; ++i) mix[i] = alpha * a[i] + beta * b[i];
    EXPECT_NEAR(influence_score(mix, val), alpha * influence_score(a, val) + beta * influence_score(b, val), 1e-10);
  }
}

TEST(Influence, LissaConvergesToInverse) {
  const Hvp diag = [](std::span<const double> v) { return std::vector<double>{2.0 * v[0], 0.5 * v[1]}; };
  const auto h = lissa_inverse_hvp(diag, std::vector<double>{1.0, 1.0}, 0.0, 4.0, 400);
  EXPECT_NEAR(h[0], 0.5, 1e-9);
  EXPECT_NEAR(h[1], 2.0, 1e-9);
  EXPECT_THROW(lissa_inverse_hvp(diag, std::vector<double>{1.0, 1.0}, 1.0, 4.0, 10), std::invalid_argument);
  EXPECT_THROW(lissa_inverse_hvp(diag, std::vector<double>{1.0, 1.0}, 0.0, 0.0, 10), std::invalid_argument);

  const InverseHvp inv = [&](std::span<const double> v) { return lissa_inverse_hvp(diag, v, 0.0, 4.0, 400); };
  EXPECT_NEAR(influence_score(std::vector<double>{1, 1}, {{2, 0.5}}, HessianMode::lissa, inv), -2.0, 1e-8);
}

TEST(Influence, FilterBoundary) {
  std::vector<SyntheticExample> ex{example("a", "Denver"), example("b", "Denver"), example("c", "Denver")};
  const auto r = filter_by_influence(ex, {{"a", -1.0}, {"b", 0.0}, {"c", 0.5}});
  ASSERT_EQ(r.kept.size(), 2u);
  EXPECT_EQ(r.dropped[0].id, "c");
  EXPECT_THROW(filter_by_influence(ex, {{"a", -1.0}}), std::invalid_argument);
}

TEST(ExampleState, InvariantsAndNames) {
  auto ex = example("x", "Denver");
  EXPECT_NO_THROW(check_invariants(ex));
  ex.state = ExampleState::kept;
  EXPECT_THROW(check_invariants(ex), std::logic_error);
  ex.final_answer = ex.answer;
  EXPECT_NO_THROW(check_invariants(ex));
  for (auto s : {ExampleState::raw, ExampleState::kept, ExampleState::relabelled, ExampleState::discarded})
    EXPECT_EQ(parse_example_state(to_string(s)), s);
  FilterConfig bad;
  bad.selftrain_keep_at = 1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}
