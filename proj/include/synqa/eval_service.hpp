// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "synqa/annotation.hpp"
#include "synqa/backends.hpp"
#include "synqa/corpus.hpp"
#include "synqa/metrics.hpp"

namespace httplib {
class Server;
}

namespace synqa::eval {

/// arms[h mod |arms|], h = first 8 bytes (big-endian) of SHA-256(annotator_id).
std::size_t assign_arm_index(std::string_view annotator_id, std::size_t n_arms);
const std::string& assign_arm(std::string_view annotator_id, std::span<const std::string> arms);

/// A submission the protocol refuses (caps, onboarding, finished session).
class Rejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Any validation other than pending -> valid / pending -> invalid.
class IllegalTransition : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct OnboardingItem {
  Passage passage;
  std::string question;
  std::size_t answer_start = 0;
  std::size_t answer_end = 0;
};

/// Fixed tutorial: three short passages with unambiguous answers.
std::vector<OnboardingItem> default_onboarding();

struct ServiceConfig {
  std::vector<std::string> arms;  // model ids, never shown to annotators
  double fool_threshold = 0.4;
  int session_questions = 5;
  int lifetime_cap = 50;
  std::chrono::milliseconds model_timeout{10000};
  std::filesystem::path log_dir;  // empty keeps everything in memory
  std::size_t snapshot_every = 200;
  std::string token_salt = "synqa";
  bool show_model_answer_to_validators = true;

  void validate() const;
};

struct AnnotatorSession {
  std::string session_id;
  std::string annotator_id;
  std::string arm;  // model id
  std::string passage_id;
  int questions_in_session = 0;
  int lifetime_questions = 0;
  bool onboarding_passed = false;
  double last_event_at = 0.0;  // service clock, seconds
};

struct Submission {
  std::string record_id;
  std::string model_answer;
  bool fooled = false;
  bool failed = false;
  Validation validation = Validation::auto_valid;
};

struct AuditEntry {
  std::string record_id;
  Validation from = Validation::pending;
  Validation to = Validation::pending;
  std::string validator_id;
  std::string at;
};

struct ArmStats {
  std::vector<metrics::AnnotatorStats> annotators;
  long n_annotators = 0;
  long n_qas = 0;
  double mean_elapsed_seconds = 0.0;
  double vmer = 0.0;
  double mvmer = 0.0;
};

/// Monotonic seconds; replaceable in tests.
using SecondsClock = std::function<double()>;
double steady_seconds();

class EvalService {
 public:
  /// `models` maps every configured arm to a backend. With a log directory
  /// set, existing logs are replayed before the service accepts requests.
  EvalService(ServiceConfig config, std::map<std::string, QaModel*> models,
              std::vector<Passage> passages, SecondsClock clock = steady_seconds);
  ~EvalService();
  EvalService(const EvalService&) = delete;
  EvalService& operator=(const EvalService&) = delete;

  const ServiceConfig& config() const { return config_; }

  /// Opaque, stable token for a model id.
  std::string arm_token(const std::string& arm) const;
  std::optional<std::string> arm_for_token(std::string_view token) const;

  AnnotatorSession start_session(const std::string& annotator_id);
  std::optional<AnnotatorSession> session(const std::string& session_id) const;
  const Passage& passage(const std::string& passage_id) const;

  /// True when every onboarding answer matches the scripted span exactly.
  bool submit_onboarding(const std::string& session_id,
                         const std::vector<std::pair<std::size_t, std::size_t>>& answers);

  /// Queries the session's arm and records the outcome. Throws Rejected for
  /// protocol refusals and std::invalid_argument for a malformed span.
  Submission submit_question(const std::string& session_id, const std::string& question,
                             std::size_t answer_start, std::size_t answer_end);

  AnnotationRecord validate_record(const std::string& record_id, Validation verdict,
                                   const std::string& validator_id);

  /// Per-annotator counts and aggregate figures for one arm (model id).
  /// Throws when the arm has no counted records or has pending ones.
  ArmStats export_stats(const std::string& arm,
                        metrics::VmerMode mode = metrics::VmerMode::strict) const;

  std::vector<AnnotationRecord> records(const std::string& arm) const;
  std::vector<AnnotationRecord> pending_records() const;
  std::optional<AnnotationRecord> record(const std::string& record_id) const;
  std::vector<AuditEntry> audit_log() const;

  /// Unknown record or session ids throw std::out_of_range throughout.

  /// Forces a snapshot of every arm (also taken every snapshot_every events).
  void snapshot();

 private:
  struct ArmState;
  ArmState& arm_state(const std::string& arm);
  const ArmState& arm_state(const std::string& arm) const;
  std::mutex& annotator_mutex(const std::string& annotator_id);
  void record_event(ArmState& st, const nlohmann::json& ev);
  void apply_event(ArmState& st, const nlohmann::json& ev);
  void write_snapshot(ArmState& st);
  void replay();

  ServiceConfig config_;
  std::map<std::string, QaModel*> models_;
  std::map<std::string, Passage> passages_;
  std::vector<std::string> passage_order_;
  SecondsClock clock_;

  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<ArmState>> arms_;
  std::map<std::string, AnnotatorSession> sessions_;
  std::map<std::string, std::string> record_arm_;
  std::map<std::string, std::unique_ptr<std::mutex>> annotator_mu_;
};

/// Registers the JSON API on `server`. Annotator-facing payloads carry arm
/// tokens only.
void register_routes(httplib::Server& server, EvalService& service);

}  // namespace synqa::eval
