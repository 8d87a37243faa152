#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hmdap/value.hpp"

namespace hmdap {

struct Column {
  std::string name;
  ColumnType type;

  friend bool operator==(const Column&, const Column&) = default;
};

/// Ordered, uniquely named columns.
class Schema {
 public:
  Schema() = default;
  /// Throws InvalidArgument on duplicate column names.
  explicit Schema(std::vector<Column> columns);
  Schema(std::initializer_list<Column> columns) : Schema(std::vector<Column>(columns)) {}

  const std::vector<Column>& columns() const noexcept { return columns_; }
  std::size_t size() const noexcept { return columns_.size(); }
  bool empty() const noexcept { return columns_.empty(); }
  const Column& operator[](std::size_t i) const { return columns_[i]; }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws Plan error naming the column when absent.
  std::size_t index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name).has_value(); }

  std::string to_string() const;

  friend bool operator==(const Schema&, const Schema&) = default;

 private:
  std::vector<Column> columns_;
};

using Row = std::vector<Value>;
using Partition = std::vector<Row>;

/// A schema plus a multiset of rows split across one or more partitions.
/// Partition boundaries carry no meaning; concatenating partitions in order
/// gives the relation's canonical row order.
class Relation {
 public:
  explicit Relation(Schema schema);
  Relation(Schema schema, std::vector<Row> rows);
  /// An empty partition list is normalised to one empty partition.
  Relation(Schema schema, std::vector<Partition> partitions);

  const Schema& schema() const noexcept { return schema_; }
  const std::vector<Partition>& partitions() const noexcept { return partitions_; }
  std::size_t partition_count() const noexcept { return partitions_.size(); }
  std::size_t row_count() const noexcept;
  bool empty() const noexcept { return row_count() == 0; }

  /// All rows in canonical order.
  std::vector<Row> rows() const;

  /// Throws InvalidArgument when a row's width or value types disagree with
  /// the schema.
  void validate() const;

 private:
  Schema schema_;
  std::vector<Partition> partitions_;
};

/// Same multiset, exactly n partitions assigned round-robin.
Relation repartition(const Relation& r, std::size_t n);

/// True iff the schemas match exactly and the row multisets are equal.
bool multiset_equal(const Relation& a, const Relation& b);

/// Human-readable explanation of the first difference, empty when equal.
std::string describe_difference(const Relation& a, const Relation& b);

/// Fixed-width text table for terminals.
std::string format_table(const Relation& r, std::size_t max_rows = 50);

}  // namespace hmdap
