#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nexcv {

// Lowercases with full Unicode case mapping and splits on every code point
// that is not a letter, digit or combining mark. Invalid UTF-8 sequences act
// as separators.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace nexcv
