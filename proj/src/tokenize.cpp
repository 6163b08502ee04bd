// SPDX-License-Identifier: Apache-2.0
#include "synqa/tokenize.hpp"

#include "synqa/text.hpp"

namespace synqa {

std::vector<TokenOffset> WordTokenizer::tokenize(std::string_view utf8) {
  const auto cps = text::decode_utf8(utf8);
  std::vector<TokenOffset> tokens;
  std::size_t i = 0;
  while (i < cps.size()) {
    if (text::is_py_space(cps[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (text::is_alnum(cps[i])) {
      while (i < cps.size() && text::is_alnum(cps[i])) ++i;
    } else {
      ++i;
    }
    tokens.push_back({start, i});
  }
  return tokens;
}

}  // namespace synqa
