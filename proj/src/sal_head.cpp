// SPDX-License-Identifier: Apache-2.0
#include "synqa/sal_head.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "synqa/text.hpp"

namespace synqa::sal {

namespace {

constexpr std::size_t kFlags = 8;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct TokenInfo {
  std::string lower;
  bool capitalized = false;
  bool all_upper = false;
  bool digit = false;
  bool punct = false;
};

TokenInfo describe(std::u32string_view cps) {
  TokenInfo t;
  std::u32string lower;
  bool any_alpha = false;
  bool all_cased_upper = true;
  for (char32_t c : cps) {
    const char32_t l = text::to_lower(c);
    if (text::is_alnum(c) && !(c >= U'0' && c <= U'9')) {
      any_alpha = true;
      if (l == c) all_cased_upper = false;
    }
    lower.push_back(l);
  }
  t.lower = text::encode_utf8(lower);
  t.capitalized = !cps.empty() && text::to_lower(cps.front()) != cps.front();
  t.all_upper = any_alpha && all_cased_upper;
  t.digit = !cps.empty() && cps.front() >= U'0' && cps.front() <= U'9';
  t.punct = !cps.empty() && !text::is_alnum(cps.front());
  return t;
}

void adam_update(Matrix& w, const Matrix& grad, Matrix& m, Matrix& v, long step, double lr) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
  for (std::size_t i = 0; i < w.data.size(); ++i) {
    m.data[i] = kBeta1 * m.data[i] + (1.0 - kBeta1) * grad.data[i];
    v.data[i] = kBeta2 * v.data[i] + (1.0 - kBeta2) * grad.data[i] * grad.data[i];
    w.data[i] -= lr * (m.data[i] / c1) / (std::sqrt(v.data[i] / c2) + kEps);
  }
}

// X^T (n x d_in)^T * G (n x d_k) -> d_in x d_k
Matrix xt_times(const Matrix& x, const Matrix& g) {
  Matrix out(x.cols, g.cols);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t f = 0; f < x.cols; ++f) {
      const double xv = x(r, f);
      if (xv == 0.0) continue;
      for (std::size_t c = 0; c < g.cols; ++c) out(f, c) += xv * g(r, c);
    }
  return out;
}

Matrix times(const Matrix& x, const Matrix& w) {
  Matrix out(x.rows, w.cols);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t f = 0; f < x.cols; ++f) {
      const double xv = x(r, f);
      if (xv == 0.0) continue;
      for (std::size_t c = 0; c < w.cols; ++c) out(r, c) += xv * w(f, c);
    }
  return out;
}

}  // namespace

std::size_t Featurizer::dim() const { return 3 * buckets_ + kFlags; }

Matrix Featurizer::features(std::string_view utf8, const std::vector<TokenOffset>& tokens) const {
  const auto cps = text::decode_utf8(utf8);
  std::vector<TokenInfo> info;
  info.reserve(tokens.size());
  for (const auto& t : tokens)
    info.push_back(describe(std::u32string_view(cps).substr(t.char_start, t.char_end - t.char_start)));

  Matrix x(tokens.size(), dim());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    x(i, fnv1a("w:" + info[i].lower) % buckets_) = 1.0;
    const std::string prev = i == 0 ? "<s>" : info[i - 1].lower;
    const std::string next = i + 1 == tokens.size() ? "</s>" : info[i + 1].lower;
    x(i, buckets_ + fnv1a("p:" + prev) % buckets_) = 1.0;
    x(i, 2 * buckets_ + fnv1a("n:" + next) % buckets_) = 1.0;
    const std::size_t f = 3 * buckets_;
    x(i, f + 0) = info[i].capitalized ? 1.0 : 0.0;
    x(i, f + 1) = info[i].all_upper ? 1.0 : 0.0;
    x(i, f + 2) = info[i].digit ? 1.0 : 0.0;
    x(i, f + 3) = info[i].punct ? 1.0 : 0.0;
    x(i, f + 4) = (i == 0 || info[i - 1].punct) ? 1.0 : 0.0;
    x(i, f + 5) = (i + 1 == tokens.size() || info[i + 1].punct) ? 1.0 : 0.0;
    x(i, f + 6) = (i > 0 && info[i - 1].capitalized) ? 1.0 : 0.0;
    x(i, f + 7) = 1.0;
  }
  return x;
}

SalHead::SalHead(HeadConfig config) : config_(config) {
  if (config_.d_k < 1 || config_.hash_buckets < 1)
    throw std::invalid_argument("SalHead: d_k and hash_buckets must be >= 1");
  const std::size_t d_in = Featurizer(config_.hash_buckets).dim();
  wq_ = Matrix(d_in, config_.d_k);
  wk_ = Matrix(d_in, config_.d_k);
  std::mt19937_64 rng(config_.seed);
  std::normal_distribution<double> normal(0.0, 0.1);
  for (double& w : wq_.data) w = normal(rng);
  for (double& w : wk_.data) w = normal(rng);
  mq_ = vq_ = mk_ = vk_ = Matrix(d_in, config_.d_k);
}

Projections SalHead::project(const Matrix& features) const {
  if (features.cols != wq_.rows)
    throw std::invalid_argument("SalHead: feature width " + std::to_string(features.cols) +
                                " does not match head input " + std::to_string(wq_.rows));
  return {times(features, wq_), times(features, wk_)};
}

double SalHead::train_step(const Matrix& features, const SpanMask& mask, const SpanMask& gold,
                           double learning_rate) {
  const auto proj = project(features);
  const auto lg = sal_loss_and_grad(proj, mask, gold, default_pos_weight(mask, gold));
  ++steps_;
  adam_update(wq_, xt_times(features, lg.dq), mq_, vq_, steps_, learning_rate);
  adam_update(wk_, xt_times(features, lg.dk), mk_, vk_, steps_, learning_rate);
  return lg.loss;
}

std::string SalHead::to_json() const {
  nlohmann::json j;
  j["hash_buckets"] = config_.hash_buckets;
  j["d_k"] = config_.d_k;
  j["max_answer_len"] = config_.max_answer_len;
  j["threshold"] = config_.threshold;
  j["seed"] = config_.seed;
  j["wq"] = wq_.data;
  j["wk"] = wk_.data;
  return j.dump();
}

SalHead SalHead::from_json(const std::string& s) {
  const auto j = nlohmann::json::parse(s);
  HeadConfig cfg;
  cfg.hash_buckets = j.at("hash_buckets").get<std::size_t>();
  cfg.d_k = j.at("d_k").get<std::size_t>();
  cfg.max_answer_len = j.at("max_answer_len").get<std::size_t>();
  cfg.threshold = j.at("threshold").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  SalHead head(cfg);
  auto wq = j.at("wq").get<std::vector<double>>();
  auto wk = j.at("wk").get<std::vector<double>>();
  if (wq.size() != head.wq_.data.size() || wk.size() != head.wk_.data.size())
    throw std::invalid_argument("SalHead: weight sizes do not match the config");
  head.wq_.data = std::move(wq);
  head.wk_.data = std::move(wk);
  return head;
}

SpanMask gold_matrix(const std::vector<TokenOffset>& tokens, const std::vector<AnswerSpan>& answers,
                     const SpanMask& mask, std::size_t* unmappable) {
  SpanMask gold(tokens.size());
  for (const auto& a : answers) {
    std::size_t si = tokens.size();
    std::size_t ej = tokens.size();
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (tokens[t].char_start == a.char_start) si = t;
      if (tokens[t].char_end == a.char_end) ej = t;
    }
    if (si == tokens.size() || ej == tokens.size() || !mask(si, ej)) {
      if (unmappable) ++*unmappable;
      continue;
    }
    gold.set(si, ej);
  }
  return gold;
}

TrainReport train_head(SalHead& head, const std::vector<AlignedAnswerSet>& data, int epochs,
                       double learning_rate) {
  WordTokenizer tokenizer;
  Featurizer featurizer(head.config().hash_buckets);
  struct Example {
    Matrix x;
    SpanMask mask;
    SpanMask gold;
  };
  TrainReport report;
  std::vector<Example> examples;
  for (const auto& set : data) {
    const auto tokens = tokenizer.tokenize(set.passage.text);
    if (tokens.empty()) continue;
    auto mask = sal_mask(tokens.size(), head.config().max_answer_len, {0, tokens.size()});
    auto gold = gold_matrix(tokens, set.answers, mask, &report.unmappable_answers);
    examples.push_back({featurizer.features(set.passage.text, tokens), std::move(mask), std::move(gold)});
  }
  for (int e = 0; e < epochs; ++e) {
    double total = 0.0;
    for (const auto& ex : examples) total += head.train_step(ex.x, ex.mask, ex.gold, learning_rate);
    report.epoch_loss.push_back(examples.empty() ? 0.0 : total / static_cast<double>(examples.size()));
  }
  return report;
}

DecodedCandidates select_sal_candidates(const SalHead& head, const Passage& passage) {
  WordTokenizer tokenizer;
  const auto tokens = tokenizer.tokenize(passage.text);
  if (tokens.empty()) return {};
  const auto mask = sal_mask(tokens.size(), head.config().max_answer_len, {0, tokens.size()});
  const auto x = Featurizer(head.config().hash_buckets).features(passage.text, tokens);
  const auto scores = sal_forward(head.project(x), mask);
  return decode_sal_candidates(scores, tokens, head.config().threshold, passage.id, passage.text);
}

}  // namespace synqa::sal
