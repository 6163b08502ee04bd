// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "synqa/span.hpp"

namespace synqa {

enum class Validation { auto_valid, pending, valid, invalid };

std::string_view to_string(Validation v);
Validation parse_validation(std::string_view s);

/// One question asked by a human adversary against a model in the loop.
/// A record is either not fooled (and auto-valid) or fooled and awaiting /
/// carrying an expert verdict. Failed records (model error or timeout) are
/// kept for audit but never counted.
struct AnnotationRecord {
  std::string record_id;
  std::string annotator_id;
  std::string arm;
  std::string passage_id;
  std::string question;
  AnswerSpan annotator_answer;
  std::string model_answer;
  bool fooled = false;
  Validation validation = Validation::auto_valid;
  double elapsed_seconds = 0.0;
  bool failed = false;
};

/// Checks the fooled/validation coupling; throws std::logic_error on violation.
void check_invariants(const AnnotationRecord& record);

}  // namespace synqa
