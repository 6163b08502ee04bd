// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>
#include <vector>

#include "synqa/backends.hpp"

namespace synqa {

/// Splits text into runs of letters/digits and single punctuation marks,
/// recording code-point offsets. Whitespace is skipped.
class WordTokenizer final : public TokenEncoder {
 public:
  std::vector<TokenOffset> tokenize(std::string_view text) override;
};

}  // namespace synqa
