// SPDX-License-Identifier: Apache-2.0
#include "synqa/annotation.hpp"

#include <stdexcept>

namespace synqa {

std::string_view to_string(Validation v) {
  switch (v) {
    case Validation::auto_valid: return "auto_valid";
    case Validation::pending: return "pending";
    case Validation::valid: return "valid";
    case Validation::invalid: return "invalid";
  }
  return "pending";
}

Validation parse_validation(std::string_view s) {
  if (s == "auto_valid") return Validation::auto_valid;
  if (s == "pending") return Validation::pending;
  if (s == "valid") return Validation::valid;
  if (s == "invalid") return Validation::invalid;
  throw std::invalid_argument("unknown validation state '" + std::string(s) + "'");
}

void check_invariants(const AnnotationRecord& record) {
  if (!record.fooled && record.validation != Validation::auto_valid)
    throw std::logic_error("record " + record.record_id + ": unfooled record must be auto_valid");
  if (record.fooled && record.validation == Validation::auto_valid)
    throw std::logic_error("record " + record.record_id + ": fooled record cannot be auto_valid");
}

}  // namespace synqa
