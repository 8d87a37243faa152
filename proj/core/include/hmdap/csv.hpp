#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "hmdap/relation.hpp"

namespace hmdap::csv {

struct Field {
  std::string text;
  bool quoted = false;
};

struct Record {
  std::int64_t line = 0;  // 1-based line where the record starts
  std::vector<Field> fields;
};

/// RFC-4180-style reader: quoted fields may contain the delimiter, doubled
/// quotes and line breaks; CRLF and LF line endings are accepted; blank lines
/// are skipped. Reads at most max_records records.
std::vector<Record> parse(std::string_view text, char delimiter,
                          std::size_t max_records = std::numeric_limits<std::size_t>::max());

/// RFC-4180 CSV with a header row and CRLF line endings. Null renders as an
/// empty field, an empty Utf8 string as "".
std::string write(const Relation& r, char delimiter = ',');

std::string escape_field(std::string_view text, char delimiter);

}  // namespace hmdap::csv
