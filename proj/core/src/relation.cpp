#include "hmdap/relation.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "hmdap/error.hpp"

namespace hmdap {

Schema::Schema(std::vector<Column> columns) : columns_(std::move(columns)) {
  std::unordered_set<std::string_view> seen;
  for (const auto& c : columns_) {
    if (!seen.insert(c.name).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate column name '" + c.name + "' in schema");
    }
  }
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Schema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw Error(ErrorCode::Plan, "unknown column '" + std::string(name) + "'");
}

std::string Schema::to_string() const {
  std::string out = "(";
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += ", ";
    out += columns_[i].name;
    out += ' ';
    out += hmdap::to_string(columns_[i].type);
  }
  return out + ")";
}

Relation::Relation(Schema schema) : schema_(std::move(schema)), partitions_(1) {}

Relation::Relation(Schema schema, std::vector<Row> rows) : schema_(std::move(schema)) {
  partitions_.push_back(std::move(rows));
}

Relation::Relation(Schema schema, std::vector<Partition> partitions)
    : schema_(std::move(schema)), partitions_(std::move(partitions)) {
  if (partitions_.empty()) partitions_.emplace_back();
}

std::size_t Relation::row_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : partitions_) n += p.size();
  return n;
}

std::vector<Row> Relation::rows() const {
  std::vector<Row> out;
  out.reserve(row_count());
  for (const auto& p : partitions_) out.insert(out.end(), p.begin(), p.end());
  return out;
}

void Relation::validate() const {
  for (const auto& p : partitions_) {
    for (const auto& row : p) {
      if (row.size() != schema_.size()) {
        throw Error(ErrorCode::InvalidArgument, "row width " + std::to_string(row.size()) +
                                                    " does not match schema width " +
                                                    std::to_string(schema_.size()));
      }
      for (std::size_t i = 0; i < row.size(); ++i) {
        auto t = row[i].type();
        if (t && *t != schema_[i].type) {
          throw Error(ErrorCode::InvalidArgument, "value of type " + std::string(to_string(*t)) +
                                                      " in column '" + schema_[i].name + "' of type " +
                                                      std::string(to_string(schema_[i].type)));
        }
      }
    }
  }
}

Relation repartition(const Relation& r, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "repartition requires at least one partition");
  std::vector<Partition> parts(n);
  const std::size_t total = r.row_count();
  for (std::size_t i = 0; i < n; ++i) parts[i].reserve(total / n + 1);
  std::size_t next = 0;
  for (const auto& p : r.partitions()) {
    for (const auto& row : p) {
      parts[next].push_back(row);
      next = (next + 1) % n;
    }
  }
  return Relation(r.schema(), std::move(parts));
}

namespace {

bool row_less(const Row& a, const Row& b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    auto c = total_order(a[i], b[i]);
    if (c != 0) return c < 0;
    // Int64(1) and Float64(1.0) are ordered-equal but not identical.
    if (a[i].type() != b[i].type()) return a[i].type() < b[i].type();
  }
  return a.size() < b.size();
}

std::string row_to_string(const Row& row) {
  std::string out = "(";
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ", ";
    out += row[i].to_sql_literal();
  }
  return out + ")";
}

}  // namespace

std::string describe_difference(const Relation& a, const Relation& b) {
  if (!(a.schema() == b.schema())) {
    return "schema " + a.schema().to_string() + " != " + b.schema().to_string();
  }
  auto ra = a.rows();
  auto rb = b.rows();
  if (ra.size() != rb.size()) {
    return "row count " + std::to_string(ra.size()) + " != " + std::to_string(rb.size());
  }
  std::sort(ra.begin(), ra.end(), row_less);
  std::sort(rb.begin(), rb.end(), row_less);
  for (std::size_t i = 0; i < ra.size(); ++i) {
    if (ra[i] != rb[i]) return "sorted row " + std::to_string(i) + ": " + row_to_string(ra[i]) + " != " +
                               row_to_string(rb[i]);
  }
  return {};
}

bool multiset_equal(const Relation& a, const Relation& b) { return describe_difference(a, b).empty(); }

std::string format_table(const Relation& r, std::size_t max_rows) {
  const auto& cols = r.schema().columns();
  std::vector<std::vector<std::string>> cells;
  std::vector<std::size_t> width(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) width[i] = cols[i].name.size();
  std::size_t shown = 0;
  for (const auto& p : r.partitions()) {
    for (const auto& row : p) {
      if (shown == max_rows) break;
      auto& line = cells.emplace_back();
      for (std::size_t i = 0; i < row.size(); ++i) {
        line.push_back(row[i].is_null() ? "NULL" : row[i].to_string());
        width[i] = std::max(width[i], line.back().size());
      }
      ++shown;
    }
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      out << (i ? " | " : "") << line[i] << std::string(width[i] - line[i].size(), ' ');
    }
    out << '\n';
  };
  std::vector<std::string> header;
  for (const auto& c : cols) header.push_back(c.name);
  emit(header);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "-+-" : "") << std::string(width[i], '-');
  out << '\n';
  for (const auto& line : cells) emit(line);
  const std::size_t total = r.row_count();
  out << "(" << total << (total == 1 ? " row" : " rows");
  if (total > shown) out << ", " << shown << " shown";
  out << ")\n";
  return out.str();
}

}  // namespace hmdap
