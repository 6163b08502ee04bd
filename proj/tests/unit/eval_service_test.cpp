// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <random>
#include <thread>

#include "oracles.hpp"
#include "synqa/eval_service.hpp"
#include "synqa/hash.hpp"
#include "synqa/io.hpp"
#include "synqa/text.hpp"

using namespace synqa;
using namespace synqa::eval;
namespace fs = std::filesystem;

namespace {

class Fixed : public QaModel {
 public:
  explicit Fixed(std::string a) : a_(std::move(a)) {}
  QaPrediction answer(std::string_view, std::string_view) override { return {a_, 0.9}; }
  std::string a_;
};

class Slow : public QaModel {
 public:
  QaPrediction answer(std::string_view, std::string_view) override {
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    return {"late", 0.5};
  }
};

class Throws : public QaModel {
 public:
  QaPrediction answer(std::string_view, std::string_view) override { throw std::runtime_error("cuda"); }
};

const std::string kText = "The AFC champion Denver Broncos defeated the Carolina Panthers.";

std::vector<Passage> passages() {
  Passage p;
  p.text = kText;
  p.id = passage_id_for(kText);
  return {p};
}

std::pair<std::size_t, std::size_t> where(const std::string& a) {
  const auto at = text::find_codepoint(kText, a);
  return {at, at + text::length(a)};
}

std::vector<std::pair<std::size_t, std::size_t>> onboarding_answers() {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& item : default_onboarding()) out.emplace_back(item.answer_start, item.answer_end);
  return out;
}

struct Clock {
  double t = 0.0;
  SecondsClock fn() {
    return [this] { return t; };
  }
};

ServiceConfig single_arm(const std::string& arm, fs::path log_dir = {}) {
  ServiceConfig c;
  c.arms = {arm};
  c.log_dir = std::move(log_dir);
  c.model_timeout = std::chrono::milliseconds(100);
  return c;
}

std::string onboarded_session(EvalService& svc, const std::string& who) {
  const auto s = svc.start_session(who);
  EXPECT_TRUE(svc.submit_onboarding(s.session_id, onboarding_answers()));
  return s.session_id;
}

}  // namespace

TEST(ArmAssignment, KnownValueAndBalance) {
  // leading bytes of SHA-256("annotator-0001") are 0x17916d2b48fd40b6
  EXPECT_EQ(leading_u64(sha256("annotator-0001")), 0x17916d2b48fd40b6ULL);
  EXPECT_EQ(assign_arm_index("annotator-0001", 4), 0x17916d2b48fd40b6ULL % 4);
  const std::vector<std::string> arms{"a", "b", "c", "d"};
  std::map<std::string, int> counts;
  for (int i = 0; i < 4000; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "annotator-%04d", i);
    const auto& arm = assign_arm(id, arms);
    EXPECT_EQ(arm, assign_arm(id, arms));
    ++counts[arm];
  }
  for (const auto& [arm, n] : counts) EXPECT_NEAR(n, 1000, 120) << arm;
  EXPECT_THROW(assign_arm_index("x", 0), std::invalid_argument);
}

TEST(EvalService, SubmissionOutcomes) {
  Fixed model("Denver Broncos");
  Clock clock;
  EvalService svc(single_arm("m"), {{"m", &model}}, passages(), clock.fn());
  const auto s = svc.start_session("ann");
  EXPECT_FALSE(s.onboarding_passed);
  const auto [a, b] = where("Broncos");
  EXPECT_THROW(svc.submit_question(s.session_id, "Who won?", a, b), Rejected);
  EXPECT_FALSE(svc.submit_onboarding(s.session_id, {{0, 1}}));
  EXPECT_TRUE(svc.submit_onboarding(s.session_id, onboarding_answers()));

  clock.t = 12.0;
  // "Broncos" against "Denver Broncos" has F1 2/3, so the model is not fooled
  const auto ok = svc.submit_question(s.session_id, "Who won?", a, b);
  EXPECT_FALSE(ok.fooled);
  EXPECT_EQ(ok.validation, Validation::auto_valid);
  EXPECT_DOUBLE_EQ(svc.record(ok.record_id)->elapsed_seconds, 12.0);

  const auto [c, d] = where("Carolina Panthers");
  clock.t = 20.0;
  const auto fooled = svc.submit_question(s.session_id, "Who lost?", c, d);
  EXPECT_TRUE(fooled.fooled);
  EXPECT_EQ(fooled.validation, Validation::pending);
  EXPECT_DOUBLE_EQ(svc.record(fooled.record_id)->elapsed_seconds, 8.0);
  EXPECT_EQ(svc.pending_records().size(), 1u);

  EXPECT_THROW(svc.export_stats("m"), std::invalid_argument);
  svc.validate_record(fooled.record_id, Validation::valid, "expert");
  const auto st = svc.export_stats("m");
  EXPECT_EQ(st.n_qas, 2);
  EXPECT_EQ(st.n_annotators, 1);
  EXPECT_DOUBLE_EQ(st.vmer, 50.0);
  EXPECT_DOUBLE_EQ(st.mean_elapsed_seconds, 10.0);

  EXPECT_THROW(svc.submit_question(s.session_id, "   ", a, b), std::invalid_argument);
  EXPECT_THROW(svc.submit_question(s.session_id, "Q?", 5, 5), std::invalid_argument);
  EXPECT_THROW(svc.submit_question("nope", "Q?", a, b), std::out_of_range);
  EXPECT_THROW(svc.record("nope").value(), std::bad_optional_access);
  EXPECT_THROW(svc.validate_record("nope", Validation::valid, "x"), std::out_of_range);
}

TEST(EvalService, ValidationStateMachine) {
  Fixed model("nothing like it");
  EvalService svc(single_arm("m"), {{"m", &model}}, passages());
  const auto sid = onboarded_session(svc, "ann");
  const auto [a, b] = where("Denver");
  const auto r1 = svc.submit_question(sid, "Q1?", a, b).record_id;
  EXPECT_THROW(svc.validate_record(r1, Validation::pending, "x"), IllegalTransition);
  EXPECT_THROW(svc.validate_record(r1, Validation::auto_valid, "x"), IllegalTransition);
  EXPECT_THROW(svc.validate_record(r1, Validation::valid, ""), std::invalid_argument);
  svc.validate_record(r1, Validation::invalid, "x");
  EXPECT_THROW(svc.validate_record(r1, Validation::valid, "x"), IllegalTransition);
  EXPECT_THROW(svc.validate_record(r1, Validation::invalid, "x"), IllegalTransition);

  Fixed right("Denver");
  EvalService svc2(single_arm("m"), {{"m", &right}}, passages());
  const auto sid2 = onboarded_session(svc2, "ann");
  const auto auto_valid = svc2.submit_question(sid2, "Q?", a, b).record_id;
  EXPECT_THROW(svc2.validate_record(auto_valid, Validation::valid, "x"), IllegalTransition);

  const auto audit = svc.audit_log();
  ASSERT_EQ(audit.size(), 1u);
  EXPECT_EQ(audit[0].from, Validation::pending);
  EXPECT_EQ(audit[0].to, Validation::invalid);
  EXPECT_EQ(audit[0].validator_id, "x");
}

TEST(EvalService, FailuresAreRecordedButNotCounted) {
  Slow slow;
  Throws boom;
  ServiceConfig cfg;
  cfg.arms = {"slow", "boom"};
  cfg.model_timeout = std::chrono::milliseconds(50);
  EvalService svc(cfg, {{"slow", &slow}, {"boom", &boom}}, passages());
  const auto [a, b] = where("Denver");
  for (int i = 0; i < 40; ++i) {
    const auto who = "ann-" + std::to_string(i);
    const auto sid = onboarded_session(svc, who);
    const auto sub = svc.submit_question(sid, "Q?", a, b);
    EXPECT_TRUE(sub.failed);
    EXPECT_FALSE(sub.fooled);
    EXPECT_EQ(svc.session(sid)->questions_in_session, 0);
  }
  EXPECT_EQ(svc.records("slow").size() + svc.records("boom").size(), 40u);
  EXPECT_THROW(svc.export_stats("slow"), std::invalid_argument);
  std::this_thread::sleep_for(std::chrono::milliseconds(400));
}

TEST(EvalService, SessionAndLifetimeCaps) {
  Fixed model("Denver");
  auto cfg = single_arm("m");
  cfg.session_questions = 5;
  cfg.lifetime_cap = 12;
  EvalService svc(cfg, {{"m", &model}}, passages());
  const auto [a, b] = where("Denver");
  int accepted = 0;
  for (int session = 0; session < 4; ++session) {
    const auto s = svc.start_session("ann");
    if (session == 0) svc.submit_onboarding(s.session_id, onboarding_answers());
    for (int q = 0; q < 6; ++q) {
      try {
        svc.submit_question(s.session_id, "Q?", a, b);
        ++accepted;
      } catch (const Rejected&) {
      }
    }
    EXPECT_LE(svc.session(s.session_id)->questions_in_session, 5);
  }
  EXPECT_EQ(accepted, 12);
}

TEST(EvalService, ArmTokensHideModelIds) {
  Fixed m1("x"), m2("y");
  ServiceConfig cfg;
  cfg.arms = {"roberta-large", "bert-base"};
  EvalService svc(cfg, {{"roberta-large", &m1}, {"bert-base", &m2}}, passages());
  const auto t = svc.arm_token("roberta-large");
  EXPECT_EQ(t.find("roberta"), std::string::npos);
  EXPECT_EQ(t, "arm-" + sha256_hex("synqa\nroberta-large").substr(0, 12));
  EXPECT_EQ(svc.arm_for_token(t), "roberta-large");
  EXPECT_FALSE(svc.arm_for_token("arm-000000000000").has_value());
  EXPECT_THROW(svc.arm_token("gpt"), std::out_of_range);
}

TEST(EvalService, ConstructionErrors) {
  Fixed m("x");
  EXPECT_THROW(EvalService(single_arm("m"), {}, passages()), std::invalid_argument);
  EXPECT_THROW(EvalService(single_arm("m"), {{"m", &m}}, {}), std::invalid_argument);
  ServiceConfig dup;
  dup.arms = {"m", "m"};
  EXPECT_THROW(dup.validate(), std::invalid_argument);
}

TEST(EvalService, ReplayRestoresStateAndCaps) {
  const auto dir = oracle::temp_dir("eval-log");
  Fixed model("Carolina");
  auto cfg = single_arm("m", dir);
  cfg.lifetime_cap = 7;
  cfg.snapshot_every = 4;
  const auto [a, b] = where("Denver");
  std::vector<AnnotationRecord> before;
  {
    EvalService svc(cfg, {{"m", &model}}, passages());
    const auto s1 = onboarded_session(svc, "ann");
    for (int i = 0; i < 5; ++i) svc.submit_question(s1, "Q" + std::to_string(i), a, b);
    const auto s2 = svc.start_session("ann").session_id;
    svc.submit_question(s2, "Q5", a, b);
    for (const auto& r : svc.pending_records()) svc.validate_record(r.record_id, Validation::valid, "v");
    before = svc.records("m");
  }
  const auto token = "arm-" + sha256_hex("synqa\nm").substr(0, 12);
  EXPECT_TRUE(fs::exists(dir / (token + ".events.jsonl")));
  EXPECT_TRUE(fs::exists(dir / (token + ".snapshot.json")));

  EvalService again(cfg, {{"m", &model}}, passages());
  const auto after = again.records("m");
  ASSERT_EQ(after.size(), before.size());
  for (std::size_t i = 0; i < after.size(); ++i) {
    EXPECT_EQ(after[i].record_id, before[i].record_id);
    EXPECT_EQ(after[i].validation, before[i].validation);
  }
  // onboarding survives; one question left under the cap
  const auto s3 = again.start_session("ann");
  EXPECT_TRUE(s3.onboarding_passed);
  again.submit_question(s3.session_id, "Q6", a, b);
  EXPECT_THROW(again.submit_question(s3.session_id, "Q7", a, b), Rejected);
  EXPECT_EQ(again.audit_log().size(), 6u);
}

TEST(EvalService, ExportMatchesRawLog) {
  const auto dir = oracle::temp_dir("eval-export");
  Fixed model("Carolina");
  Fixed right("Denver");
  ServiceConfig cfg;
  cfg.arms = {"wrong", "right"};
  cfg.log_dir = dir;
  EvalService svc(cfg, {{"wrong", &model}, {"right", &right}}, passages());
  std::mt19937 rng(4);
  const auto [a, b] = where("Denver");
  for (int i = 0; i < 30; ++i) {
    const auto sid = onboarded_session(svc, "ann-" + std::to_string(i));
    const int n = 1 + static_cast<int>(rng() % 5);
    for (int q = 0; q < n; ++q) svc.submit_question(sid, "Q?", a, b);
  }
  for (const auto& r : svc.pending_records())
    svc.validate_record(r.record_id, rng() % 3 ? Validation::valid : Validation::invalid, "v");
  for (const auto& arm : cfg.arms) {
    std::map<std::string, AnnotationRecord> latest;
    for (const auto& ev : io::read_jsonl(dir / (svc.arm_token(arm) + ".events.jsonl"))) {
      if (ev.at("type") == "record") {
        const auto r = ev.at("record").get<AnnotationRecord>();
        latest[r.record_id] = r;
      } else if (ev.at("type") == "validation") {
        latest.at(ev.at("record_id").get<std::string>()).validation =
            parse_validation(ev.at("to").get<std::string>());
      }
    }
    std::vector<AnnotationRecord> raw;
    for (auto& [id, r] : latest) raw.push_back(r);
    const auto st = svc.export_stats(arm);
    EXPECT_NEAR(st.vmer, oracle::vmer_percent(raw, true), 1e-12) << arm;
    EXPECT_EQ(st.n_qas, static_cast<long>(raw.size()));
  }
}

TEST(HttpApi, EndToEnd) {
  Fixed model("Carolina");
  auto cfg = single_arm("secret-model");
  EvalService svc(cfg, {{"secret-model", &model}}, passages());
  httplib::Server server;
  register_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);

  auto post = [&](const std::string& path, const json& body) {
    auto res = cli.Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    return std::make_pair(res->status, json::parse(res->body));
  };
  auto [st, s] = post("/session", {{"annotator_id", "ann"}});
  ASSERT_EQ(st, 200);
  EXPECT_EQ(s.dump().find("secret-model"), std::string::npos);
  EXPECT_TRUE(s.at("onboarding_required").get<bool>());
  const auto sid = s.at("session_id").get<std::string>();
  const auto token = s.at("arm_token").get<std::string>();

  const auto [a, b] = where("Denver");
  EXPECT_EQ(post("/session/" + sid + "/question", {{"question", "Q?"}, {"answer_start", a}, {"answer_end", b}}).first,
            409);
  json answers = json::array();
  for (const auto& [x, y] : onboarding_answers()) answers.push_back({{"answer_start", x}, {"answer_end", y}});
  EXPECT_TRUE(post("/session/" + sid + "/onboarding", {{"answers", answers}}).second.at("passed").get<bool>());
  auto [qs, q] = post("/session/" + sid + "/question", {{"question", "Q?"}, {"answer_start", a}, {"answer_end", b}});
  ASSERT_EQ(qs, 200);
  EXPECT_TRUE(q.at("fooled").get<bool>());
  const auto rid = q.at("record_id").get<std::string>();

  auto pending = cli.Get("/records/pending");
  ASSERT_TRUE(pending);
  EXPECT_EQ(json::parse(pending->body).at("records").size(), 1u);
  EXPECT_EQ(pending->body.find("secret-model"), std::string::npos);
  EXPECT_EQ(cli.Get("/arms/" + token + "/stats")->status, 400);

  EXPECT_EQ(post("/records/" + rid + "/validate", {{"verdict", "valid"}, {"validator_id", "v"}}).first, 200);
  EXPECT_EQ(post("/records/" + rid + "/validate", {{"verdict", "valid"}, {"validator_id", "v"}}).first, 409);
  EXPECT_EQ(post("/records/none/validate", {{"verdict", "valid"}, {"validator_id", "v"}}).first, 404);
  EXPECT_EQ(post("/session", {{"who", 1}}).first, 400);

  auto stats = cli.Get("/arms/" + token + "/stats");
  ASSERT_TRUE(stats);
  EXPECT_EQ(stats->status, 200);
  EXPECT_DOUBLE_EQ(json::parse(stats->body).at("vmer").get<double>(), 100.0);
  EXPECT_EQ(cli.Get("/arms/arm-nope/stats")->status, 404);
  EXPECT_EQ(json::parse(cli.Get("/onboarding")->body).at("items").size(), default_onboarding().size());

  server.stop();
  t.join();
}
