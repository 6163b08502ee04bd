// SPDX-License-Identifier: Apache-2.0
#pragma once

// Brute-force reference implementations used by unit and acceptance tests.
// They are deliberately naive and share no code with the library paths they
// check.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "synqa/annotation.hpp"
#include "synqa/backends.hpp"
#include "synqa/filters.hpp"
#include "synqa/sal.hpp"

namespace oracle {

/// sigmoid(dot(q_i, k_j) / sqrt(d)) per cell, 0 where masked.
std::vector<double> sal_probs(const synqa::sal::Projections& p, const synqa::sal::SpanMask& mask);

/// The three admissibility conditions checked literally.
bool admissible(std::size_t i, std::size_t j, std::size_t max_len, std::size_t begin, std::size_t end);

struct Gradient {
  std::vector<double> dq;
  std::vector<double> dk;
};

/// Central differences of sal_loss(sal_forward(p)) in every coordinate.
Gradient finite_difference_grad(const synqa::sal::Projections& p, const synqa::sal::SpanMask& mask,
                                const synqa::sal::SpanMask& gold, double pos_weight, double h);

struct RelabelOutcome {
  synqa::ExampleState state = synqa::ExampleState::discarded;
  std::optional<std::string> answer;
};

/// Self-training rule evaluated by pairwise agreement counting.
RelabelOutcome self_train(const std::vector<synqa::QaPrediction>& preds, const std::string& prompted,
                          int keep_at, int relabel_at);

/// True when the two word sequences share any contiguous n-word window.
bool shares_window(const std::vector<std::string>& a, const std::vector<std::string>& b, int n);

/// Arithmetic of the vMER definition over raw records.
double vmer_percent(const std::vector<synqa::AnnotationRecord>& records, bool strict);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

std::string read_file(const std::filesystem::path& p);

}  // namespace oracle
