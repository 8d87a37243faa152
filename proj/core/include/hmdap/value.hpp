#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace hmdap {

enum class ColumnType { Bool, Int64, Float64, Utf8 };

std::string_view to_string(ColumnType type);
std::optional<ColumnType> parse_column_type(std::string_view name);
inline bool is_numeric(ColumnType type) {
  return type == ColumnType::Int64 || type == ColumnType::Float64;
}

/// A tagged scalar: Null or exactly one of the four column types.
class Value {
 public:
  Value() = default;
  Value(std::nullptr_t) {}
  Value(bool v) : data_(v) {}
  Value(std::int64_t v) : data_(v) {}
  Value(int v) : data_(static_cast<std::int64_t>(v)) {}
  Value(double v) : data_(v) {}
  Value(std::string v) : data_(std::move(v)) {}
  Value(const char* v) : data_(std::string(v)) {}

  static Value null() { return {}; }

  bool is_null() const noexcept { return data_.index() == 0; }
  /// nullopt for Null.
  std::optional<ColumnType> type() const noexcept;

  bool as_bool() const { return std::get<bool>(data_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(data_); }
  double as_float() const { return std::get<double>(data_); }
  const std::string& as_string() const { return std::get<std::string>(data_); }
  /// Int64 widened to Float64; throws for non-numeric values.
  double as_double() const;

  bool is_bool() const noexcept { return std::holds_alternative<bool>(data_); }
  bool is_int() const noexcept { return std::holds_alternative<std::int64_t>(data_); }
  bool is_float() const noexcept { return std::holds_alternative<double>(data_); }
  bool is_string() const noexcept { return std::holds_alternative<std::string>(data_); }
  bool is_numeric() const noexcept { return is_int() || is_float(); }

  /// Structural identity: same tag and same payload. Int64(1) != Float64(1.0).
  friend bool operator==(const Value& a, const Value& b);

  /// Display/CSV rendering. Null renders as the empty string.
  std::string to_string() const;
  /// SQL literal rendering, e.g. 'it''s', NULL, 2.5.
  std::string to_sql_literal() const;

  std::size_t hash() const noexcept;

 private:
  std::variant<std::monostate, bool, std::int64_t, double, std::string> data_;
};

/// Total order used by sorting, grouping output and min/max: Null first,
/// Int64 and Float64 compared numerically, then by type rank.
std::weak_ordering total_order(const Value& a, const Value& b);

/// SQL equality between two non-null comparable values, with Int64/Float64
/// coercion. Used for join keys and value comparisons.
bool sql_equal(const Value& a, const Value& b);

/// Hash compatible with sql_equal (numerics hash by their double value).
std::size_t sql_hash(const Value& v) noexcept;

std::string format_double(double v);

/// Strict whole-string parsers used by CSV scanning and type inference.
std::optional<std::int64_t> parse_int64(std::string_view text);
std::optional<double> parse_float64(std::string_view text);
std::optional<bool> parse_bool(std::string_view text);

struct ValueHash {
  std::size_t operator()(const Value& v) const noexcept { return v.hash(); }
};

}  // namespace hmdap
