// SPDX-License-Identifier: Apache-2.0
#include "synqa/eval_service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <future>
#include <set>
#include <thread>

#include "synqa/hash.hpp"
#include "synqa/io.hpp"
#include "synqa/span.hpp"
#include "synqa/text.hpp"

namespace synqa::eval {

using nlohmann::json;
namespace fs = std::filesystem;

std::size_t assign_arm_index(std::string_view annotator_id, std::size_t n_arms) {
  if (n_arms == 0) throw std::invalid_argument("assign_arm: no arms");
  return static_cast<std::size_t>(leading_u64(sha256(annotator_id)) % n_arms);
}

const std::string& assign_arm(std::string_view annotator_id, std::span<const std::string> arms) {
  return arms[assign_arm_index(annotator_id, arms.size())];
}

std::vector<OnboardingItem> default_onboarding() {
  auto item = [](std::string title, std::string text, std::string question, std::string answer) {
    OnboardingItem it;
    it.passage.text = std::move(text);
    it.passage.id = passage_id_for(it.passage.text);
    it.passage.title = std::move(title);
    it.question = std::move(question);
    it.answer_start = text::find_codepoint(it.passage.text, answer);
    it.answer_end = it.answer_start + text::length(answer);
    return it;
  };
  return {
      item("Lighthouse", "The lighthouse on Skerry Point was first lit in 1852 and automated in 1978.",
           "In which year was the lighthouse automated?", "1978"),
      item("Bridge",
           "Engineers chose granite for the piers because the river carried heavy ice each spring.",
           "What did the river carry each spring?", "heavy ice"),
      item("Orchard",
           "Marta Vell planted the orchard, but her nephew Tomas sold the apples at the market.",
           "Who sold the apples?", "her nephew Tomas"),
  };
}

void ServiceConfig::validate() const {
  if (arms.empty()) throw std::invalid_argument("eval service: no arms configured");
  if (std::set<std::string>(arms.begin(), arms.end()).size() != arms.size())
    throw std::invalid_argument("eval service: duplicate arm ids");
  if (!(fool_threshold > 0.0 && fool_threshold <= 1.0))
    throw std::invalid_argument("eval service: fool_threshold must lie in (0, 1]");
  if (session_questions < 1 || lifetime_cap < 1)
    throw std::invalid_argument("eval service: caps must be >= 1");
  if (model_timeout.count() <= 0) throw std::invalid_argument("eval service: timeout must be > 0");
  if (snapshot_every == 0) throw std::invalid_argument("eval service: snapshot_every must be >= 1");
}

double steady_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

namespace {

std::string iso_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json audit_json(const AuditEntry& a) {
  return {{"record_id", a.record_id},
          {"from", to_string(a.from)},
          {"to", to_string(a.to)},
          {"validator_id", a.validator_id},
          {"at", a.at}};
}

AuditEntry audit_from(const json& j) {
  return {j.at("record_id").get<std::string>(), parse_validation(j.at("from").get<std::string>()),
          parse_validation(j.at("to").get<std::string>()), j.at("validator_id").get<std::string>(),
          j.value("at", std::string())};
}

}  // namespace

struct EvalService::ArmState {
  std::string arm;
  std::string token;
  std::vector<AnnotationRecord> records;
  std::map<std::string, std::size_t> index;
  std::set<std::string> onboarded;
  std::map<std::string, int> sessions_started;
  std::map<std::string, int> lifetime;
  std::vector<AuditEntry> audit;
  std::size_t events = 0;
  std::size_t since_snapshot = 0;
  std::ofstream log;

  fs::path log_path(const fs::path& dir) const { return dir / (token + ".events.jsonl"); }
  fs::path snapshot_path(const fs::path& dir) const { return dir / (token + ".snapshot.json"); }
};

EvalService::EvalService(ServiceConfig config, std::map<std::string, QaModel*> models,
                         std::vector<Passage> passages, SecondsClock clock)
    : config_(std::move(config)), models_(std::move(models)), clock_(std::move(clock)) {
  config_.validate();
  for (const auto& arm : config_.arms) {
    auto it = models_.find(arm);
    if (it == models_.end() || it->second == nullptr)
      throw std::invalid_argument("eval service: no model backend for arm '" + arm + "'");
    auto st = std::make_unique<ArmState>();
    st->arm = arm;
    st->token = arm_token(arm);
    arms_.emplace(arm, std::move(st));
  }
  if (passages.empty()) throw std::invalid_argument("eval service: no passages");
  for (auto& p : passages) {
    passage_order_.push_back(p.id);
    passages_.emplace(p.id, std::move(p));
  }
  for (auto& item : default_onboarding()) passages_.emplace(item.passage.id, item.passage);
  if (!config_.log_dir.empty()) {
    fs::create_directories(config_.log_dir);
    replay();
    for (auto& [arm, st] : arms_) {
      st->log.open(st->log_path(config_.log_dir), std::ios::app | std::ios::binary);
      if (!st->log) throw std::runtime_error("cannot open event log for arm " + st->token);
    }
  }
}

EvalService::~EvalService() = default;

std::string EvalService::arm_token(const std::string& arm) const {
  if (std::find(config_.arms.begin(), config_.arms.end(), arm) == config_.arms.end())
    throw std::out_of_range("unknown arm '" + arm + "'");
  return "arm-" + sha256_hex(config_.token_salt + "\n" + arm).substr(0, 12);
}

std::optional<std::string> EvalService::arm_for_token(std::string_view token) const {
  for (const auto& [arm, st] : arms_)
    if (st->token == token) return arm;
  return std::nullopt;
}

EvalService::ArmState& EvalService::arm_state(const std::string& arm) {
  auto it = arms_.find(arm);
  if (it == arms_.end()) throw std::out_of_range("unknown arm '" + arm + "'");
  return *it->second;
}

const EvalService::ArmState& EvalService::arm_state(const std::string& arm) const {
  auto it = arms_.find(arm);
  if (it == arms_.end()) throw std::out_of_range("unknown arm '" + arm + "'");
  return *it->second;
}

std::mutex& EvalService::annotator_mutex(const std::string& annotator_id) {
  std::lock_guard lock(mu_);
  auto& slot = annotator_mu_[annotator_id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

void EvalService::apply_event(ArmState& st, const json& ev) {
  const auto type = ev.at("type").get<std::string>();
  if (type == "session") {
    ++st.sessions_started[ev.at("annotator_id").get<std::string>()];
  } else if (type == "onboarding") {
    st.onboarded.insert(ev.at("annotator_id").get<std::string>());
  } else if (type == "record") {
    auto r = ev.at("record").get<AnnotationRecord>();
    if (!r.failed) ++st.lifetime[r.annotator_id];
    st.index.emplace(r.record_id, st.records.size());
    record_arm_[r.record_id] = st.arm;
    st.records.push_back(std::move(r));
  } else if (type == "validation") {
    auto a = audit_from(ev);
    st.records.at(st.index.at(a.record_id)).validation = a.to;
    st.audit.push_back(std::move(a));
  } else {
    throw std::runtime_error("event log: unknown event type '" + type + "'");
  }
  ++st.events;
}

void EvalService::record_event(ArmState& st, const json& ev) {
  if (st.log.is_open()) {
    st.log << ev.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    st.log.flush();
    if (!st.log) throw std::runtime_error("event log write failed for arm " + st.token);
  }
  apply_event(st, ev);
  if (st.log.is_open() && ++st.since_snapshot >= config_.snapshot_every) write_snapshot(st);
}

void EvalService::write_snapshot(ArmState& st) {
  json records = json::array();
  for (const auto& r : st.records) records.push_back(r);
  json audit = json::array();
  for (const auto& a : st.audit) audit.push_back(audit_json(a));
  json snap{{"arm_token", st.token},
            {"events", st.events},
            {"records", records},
            {"onboarded", st.onboarded},
            {"sessions_started", st.sessions_started},
            {"audit", audit}};
  io::write_json(st.snapshot_path(config_.log_dir), snap);
  st.since_snapshot = 0;
}

void EvalService::snapshot() {
  std::lock_guard lock(mu_);
  if (config_.log_dir.empty()) return;
  for (auto& [arm, st] : arms_) write_snapshot(*st);
}

void EvalService::replay() {
  for (auto& [arm, stp] : arms_) {
    auto& st = *stp;
    std::size_t skip = 0;
    if (fs::exists(st.snapshot_path(config_.log_dir))) {
      const auto snap = io::read_json(st.snapshot_path(config_.log_dir));
      for (const auto& r : snap.at("records")) apply_event(st, {{"type", "record"}, {"record", r}});
      for (const auto& a : snap.at("audit")) st.audit.push_back(audit_from(a));
      for (const auto& id : snap.at("onboarded")) st.onboarded.insert(id.get<std::string>());
      st.sessions_started = snap.at("sessions_started").get<std::map<std::string, int>>();
      skip = snap.at("events").get<std::size_t>();
      st.events = skip;
    }
    if (!fs::exists(st.log_path(config_.log_dir))) continue;
    const auto events = io::read_jsonl(st.log_path(config_.log_dir));
    if (events.size() < skip)
      throw std::runtime_error("event log for arm " + st.token + " is shorter than its snapshot");
    for (std::size_t i = skip; i < events.size(); ++i) apply_event(st, events[i]);
  }
}

AnnotatorSession EvalService::start_session(const std::string& annotator_id) {
  if (annotator_id.empty()) throw std::invalid_argument("annotator_id is required");
  std::lock_guard alock(annotator_mutex(annotator_id));
  std::lock_guard lock(mu_);
  const auto& arm = assign_arm(annotator_id, config_.arms);
  auto& st = arm_state(arm);
  const int n = st.sessions_started[annotator_id];
  AnnotatorSession s;
  s.session_id = "s-" + sha256_hex(annotator_id + "#" + std::to_string(n)).substr(0, 16);
  s.annotator_id = annotator_id;
  s.arm = arm;
  s.passage_id = passage_order_[static_cast<std::size_t>(
      leading_u64(sha256(annotator_id + "@" + std::to_string(n))) % passage_order_.size())];
  s.lifetime_questions = st.lifetime[annotator_id];
  s.onboarding_passed = st.onboarded.count(annotator_id) > 0;
  s.last_event_at = clock_();
  record_event(st, {{"type", "session"}, {"annotator_id", annotator_id}, {"session_id", s.session_id}});
  sessions_[s.session_id] = s;
  return s;
}

std::optional<AnnotatorSession> EvalService::session(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

const Passage& EvalService::passage(const std::string& passage_id) const {
  auto it = passages_.find(passage_id);
  if (it == passages_.end()) throw std::out_of_range("unknown passage '" + passage_id + "'");
  return it->second;
}

bool EvalService::submit_onboarding(const std::string& session_id,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& answers) {
  const auto s = session(session_id);
  if (!s) throw std::out_of_range("unknown session '" + session_id + "'");
  const auto script = default_onboarding();
  bool pass = answers.size() == script.size();
  for (std::size_t i = 0; pass && i < script.size(); ++i)
    pass = answers[i].first == script[i].answer_start && answers[i].second == script[i].answer_end;
  if (!pass) return false;
  std::lock_guard alock(annotator_mutex(s->annotator_id));
  std::lock_guard lock(mu_);
  auto& st = arm_state(s->arm);
  if (!st.onboarded.count(s->annotator_id))
    record_event(st, {{"type", "onboarding"}, {"annotator_id", s->annotator_id}});
  sessions_[session_id].onboarding_passed = true;
  return true;
}

Submission EvalService::submit_question(const std::string& session_id, const std::string& question,
                                        std::size_t answer_start, std::size_t answer_end) {
  auto snapshot_session = session(session_id);
  if (!snapshot_session) throw std::out_of_range("unknown session '" + session_id + "'");
  std::lock_guard alock(annotator_mutex(snapshot_session->annotator_id));

  AnnotatorSession s;
  QaModel* model = nullptr;
  {
    std::lock_guard lock(mu_);
    s = sessions_.at(session_id);
    auto& st = arm_state(s.arm);
    s.onboarding_passed = s.onboarding_passed || st.onboarded.count(s.annotator_id) > 0;
    if (!s.onboarding_passed) throw Rejected("onboarding not passed");
    if (st.lifetime[s.annotator_id] >= config_.lifetime_cap)
      throw Rejected("lifetime cap of " + std::to_string(config_.lifetime_cap) +
                     " questions reached");
    if (s.questions_in_session >= config_.session_questions)
      throw Rejected("session complete after " + std::to_string(config_.session_questions) +
                     " questions; start a new session");
    model = models_.at(s.arm);
  }
  if (question.find_first_not_of(" \t\r\n") == std::string::npos)
    throw std::invalid_argument("question is empty");
  const auto& p = passage(s.passage_id);
  const auto annotator_answer = make_span(p.id, p.text, answer_start, answer_end, SourceDataset::synthetic);

  auto promise = std::make_shared<std::promise<QaPrediction>>();
  auto future = promise->get_future();
  std::thread([promise, model, context = p.text, question]() {
    try {
      promise->set_value(model->answer(context, question));
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
  }).detach();

  AnnotationRecord r;
  r.annotator_id = s.annotator_id;
  r.arm = s.arm;
  r.passage_id = p.id;
  r.question = question;
  r.annotator_answer = annotator_answer;
  if (future.wait_for(config_.model_timeout) == std::future_status::ready) {
    try {
      r.model_answer = future.get().text;
      r.fooled = metrics::token_f1(r.model_answer, annotator_answer.text) < config_.fool_threshold;
      r.validation = r.fooled ? Validation::pending : Validation::auto_valid;
    } catch (const std::exception&) {
      r.failed = true;
    }
  } else {
    r.failed = true;
  }

  std::lock_guard lock(mu_);
  auto& st = arm_state(s.arm);
  char seq[16];
  std::snprintf(seq, sizeof seq, "%06zu", st.records.size() + 1);
  r.record_id = st.token + "-" + seq;
  const double now = clock_();
  auto& live = sessions_.at(session_id);
  r.elapsed_seconds = std::max(0.0, now - live.last_event_at);
  check_invariants(r);
  record_event(st, {{"type", "record"}, {"record", r}});
  live.last_event_at = now;
  live.onboarding_passed = true;
  if (!r.failed) ++live.questions_in_session;
  live.lifetime_questions = st.lifetime[s.annotator_id];
  return {r.record_id, r.model_answer, r.fooled, r.failed, r.validation};
}

AnnotationRecord EvalService::validate_record(const std::string& record_id, Validation verdict,
                                              const std::string& validator_id) {
  if (verdict != Validation::valid && verdict != Validation::invalid)
    throw IllegalTransition("a verdict must be valid or invalid, not " + std::string(to_string(verdict)));
  if (validator_id.empty()) throw std::invalid_argument("validator_id is required");
  std::lock_guard lock(mu_);
  auto ra = record_arm_.find(record_id);
  if (ra == record_arm_.end()) throw std::out_of_range("unknown record '" + record_id + "'");
  auto& st = arm_state(ra->second);
  const auto& r = st.records.at(st.index.at(record_id));
  if (r.validation != Validation::pending)
    throw IllegalTransition("record " + record_id + " is " + std::string(to_string(r.validation)) +
                            "; only pending records can be validated");
  AuditEntry a{record_id, r.validation, verdict, validator_id, iso_now()};
  auto ev = audit_json(a);
  ev["type"] = "validation";
  record_event(st, ev);
  return st.records.at(st.index.at(record_id));
}

ArmStats EvalService::export_stats(const std::string& arm, metrics::VmerMode mode) const {
  std::lock_guard lock(mu_);
  const auto& st = arm_state(arm);
  std::vector<AnnotationRecord> counted;
  std::vector<std::string> pending;
  for (const auto& r : st.records) {
    if (r.failed) continue;
    if (r.validation == Validation::pending) pending.push_back(r.record_id);
    counted.push_back(r);
  }
  if (counted.empty()) throw std::invalid_argument("arm " + st.token + " has no records");
  if (!pending.empty()) {
    std::string msg = "arm " + st.token + " has unresolved records:";
    for (const auto& id : pending) msg += " " + id;
    throw std::invalid_argument(msg);
  }
  ArmStats out;
  out.annotators = metrics::annotator_stats(counted, mode);
  out.n_annotators = static_cast<long>(out.annotators.size());
  out.n_qas = static_cast<long>(counted.size());
  double elapsed = 0.0;
  for (const auto& r : counted) elapsed += r.elapsed_seconds;
  out.mean_elapsed_seconds = elapsed / static_cast<double>(counted.size());
  if (!out.annotators.empty()) {
    out.vmer = metrics::vmer_from_stats(out.annotators);
    out.mvmer = metrics::mvmer(out.annotators);
  }
  return out;
}

std::vector<AnnotationRecord> EvalService::records(const std::string& arm) const {
  std::lock_guard lock(mu_);
  return arm_state(arm).records;
}

std::vector<AnnotationRecord> EvalService::pending_records() const {
  std::lock_guard lock(mu_);
  std::vector<AnnotationRecord> out;
  for (const auto& [arm, st] : arms_)
    for (const auto& r : st->records)
      if (r.validation == Validation::pending) out.push_back(r);
  return out;
}

std::optional<AnnotationRecord> EvalService::record(const std::string& record_id) const {
  std::lock_guard lock(mu_);
  auto ra = record_arm_.find(record_id);
  if (ra == record_arm_.end()) return std::nullopt;
  const auto& st = arm_state(ra->second);
  return st.records.at(st.index.at(record_id));
}

std::vector<AuditEntry> EvalService::audit_log() const {
  std::lock_guard lock(mu_);
  std::vector<AuditEntry> out;
  for (const auto& [arm, st] : arms_) out.insert(out.end(), st->audit.begin(), st->audit.end());
  return out;
}

// --- HTTP ------------------------------------------------------------------

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
}

template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const Rejected& e) {
    reply(res, 409, {{"error", e.what()}, {"rejected", true}});
  } catch (const IllegalTransition& e) {
    reply(res, 409, {{"error", e.what()}});
  } catch (const std::out_of_range& e) {
    reply(res, 404, {{"error", e.what()}});
  } catch (const json::exception& e) {
    reply(res, 400, {{"error", std::string("malformed request: ") + e.what()}});
  } catch (const std::invalid_argument& e) {
    reply(res, 400, {{"error", e.what()}});
  } catch (const std::exception& e) {
    reply(res, 500, {{"error", e.what()}});
  }
}

json passage_json(const Passage& p) { return {{"id", p.id}, {"title", p.title}, {"text", p.text}}; }

}  // namespace

void register_routes(httplib::Server& server, EvalService& service) {
  auto record_view = [&service](const AnnotationRecord& r, bool for_validator) {
    json j = r;
    j["arm"] = service.arm_token(r.arm);
    if (for_validator && !service.config().show_model_answer_to_validators) j.erase("model_answer");
    return j;
  };

  server.Post("/session", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto body = json::parse(req.body);
      const auto s = service.start_session(body.at("annotator_id").get<std::string>());
      reply(res, 200,
            {{"session_id", s.session_id},
             {"arm_token", service.arm_token(s.arm)},
             {"passage", passage_json(service.passage(s.passage_id))},
             {"onboarding_required", !s.onboarding_passed},
             {"questions_remaining",
              std::max(0, std::min(service.config().session_questions,
                                   service.config().lifetime_cap - s.lifetime_questions))}});
    });
  });

  server.Get("/onboarding", [](const httplib::Request&, httplib::Response& res) {
    json items = json::array();
    for (const auto& it : default_onboarding())
      items.push_back({{"passage", passage_json(it.passage)}, {"question", it.question}});
    reply(res, 200, {{"items", items}});
  });

  server.Post(R"(/session/([^/]+)/onboarding)",
              [&service](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  const auto body = json::parse(req.body);
                  std::vector<std::pair<std::size_t, std::size_t>> answers;
                  for (const auto& a : body.at("answers"))
                    answers.emplace_back(a.at("answer_start").get<std::size_t>(),
                                         a.at("answer_end").get<std::size_t>());
                  reply(res, 200, {{"passed", service.submit_onboarding(req.matches[1], answers)}});
                });
              });

  server.Post(R"(/session/([^/]+)/question)",
              [&service](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  const auto body = json::parse(req.body);
                  const std::string session_id = req.matches[1];
                  const auto sub = service.submit_question(
                      session_id, body.at("question").get<std::string>(),
                      body.at("answer_start").get<std::size_t>(),
                      body.at("answer_end").get<std::size_t>());
                  const auto s = service.session(session_id);
                  reply(res, 200,
                        {{"record_id", sub.record_id},
                         {"model_answer", sub.model_answer},
                         {"fooled", sub.fooled},
                         {"failed", sub.failed},
                         {"questions_in_session", s ? s->questions_in_session : 0}});
                });
              });

  server.Post(R"(/records/([^/]+)/validate)",
              [&service, record_view](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  const auto body = json::parse(req.body);
                  const auto verdict = parse_validation(body.at("verdict").get<std::string>());
                  const auto r = service.validate_record(
                      req.matches[1], verdict, body.at("validator_id").get<std::string>());
                  reply(res, 200, record_view(r, true));
                });
              });

  server.Get("/records/pending",
             [&service, record_view](const httplib::Request&, httplib::Response& res) {
               guarded(res, [&] {
                 json out = json::array();
                 for (const auto& r : service.pending_records()) out.push_back(record_view(r, true));
                 reply(res, 200, {{"records", out}});
               });
             });

  server.Get(R"(/arms/([^/]+)/stats)", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string token = req.matches[1];
      const auto arm = service.arm_for_token(token);
      if (!arm) throw std::out_of_range("unknown arm token '" + token + "'");
      const auto st = service.export_stats(*arm);
      reply(res, 200,
            {{"arm_token", token},
             {"annotators", st.annotators},
             {"n_annotators", st.n_annotators},
             {"n_qas", st.n_qas},
             {"mean_elapsed_seconds", st.mean_elapsed_seconds},
             {"vmer", st.vmer},
             {"mvmer", st.mvmer}});
    });
  });
}

}  // namespace synqa::eval
