#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace nexcv::csv {

// One parsed record and the 1-based physical line it starts on.
struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

// RFC-4180 reader. Quoted fields may contain commas, quotes ("") and line
// breaks. Accepts LF and CRLF record terminators. A trailing line break at
// end of input does not produce an empty record. Throws DatasetError with the
// line number on an unterminated quote or stray characters after a quote.
std::vector<Record> read(std::istream& in);

// Quotes the field only when it contains a comma, quote, CR or LF, or
// leading/trailing whitespace.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

}  // namespace nexcv::csv
