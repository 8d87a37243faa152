#include "hmdap/csv.hpp"

#include "hmdap/error.hpp"

namespace hmdap::csv {

std::vector<Record> parse(std::string_view text, char delimiter, std::size_t max_records) {
  std::vector<Record> records;
  std::size_t pos = 0;
  std::int64_t line = 1;
  const std::size_t n = text.size();

  while (pos < n && records.size() < max_records) {
    // Blank line.
    if (text[pos] == '\n' || (text[pos] == '\r' && pos + 1 < n && text[pos + 1] == '\n')) {
      pos += text[pos] == '\r' ? 2 : 1;
      ++line;
      continue;
    }
    Record rec;
    rec.line = line;
    Field field;
    bool at_field_start = true;
    bool done = false;
    while (!done) {
      if (pos >= n) {
        rec.fields.push_back(std::move(field));
        break;
      }
      const char c = text[pos];
      if (at_field_start && c == '"') {
        field.quoted = true;
        const std::int64_t open_line = line;
        ++pos;
        for (;;) {
          if (pos >= n) {
            throw Error(ErrorCode::Scan, "unterminated quoted field starting on line " + std::to_string(open_line));
          }
          if (text[pos] == '"') {
            if (pos + 1 < n && text[pos + 1] == '"') {
              field.text += '"';
              pos += 2;
              continue;
            }
            ++pos;
            break;
          }
          if (text[pos] == '\n') ++line;
          field.text += text[pos++];
        }
        at_field_start = false;
        continue;
      }
      if (c == delimiter) {
        rec.fields.push_back(std::move(field));
        field = Field{};
        at_field_start = true;
        ++pos;
        continue;
      }
      if (c == '\n' || (c == '\r' && pos + 1 < n && text[pos + 1] == '\n')) {
        pos += c == '\r' ? 2 : 1;
        ++line;
        rec.fields.push_back(std::move(field));
        done = true;
        continue;
      }
      field.text += c;
      at_field_start = false;
      ++pos;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::string escape_field(std::string_view text, char delimiter) {
  const bool needs_quotes = text.empty() || text.find_first_of(std::string{delimiter, '"', '\r', '\n'}) !=
                                                std::string_view::npos;
  if (!needs_quotes) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string write(const Relation& r, char delimiter) {
  std::string out;
  const auto& cols = r.schema().columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += delimiter;
    out += escape_field(cols[i].name, delimiter);
  }
  out += "\r\n";
  for (const auto& part : r.partitions()) {
    for (const auto& row : part) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += delimiter;
        if (!row[i].is_null()) out += escape_field(row[i].to_string(), delimiter);
      }
      out += "\r\n";
    }
  }
  return out;
}

}  // namespace hmdap::csv
