#include "hmdap/value.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>

#include "hmdap/error.hpp"

namespace hmdap {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::Syntax: return "syntax_error";
    case ErrorCode::Plan: return "plan_error";
    case ErrorCode::Type: return "type_error";
    case ErrorCode::Runtime: return "runtime_error";
    case ErrorCode::Io: return "io_error";
    case ErrorCode::SchemaInference: return "schema_inference_error";
    case ErrorCode::Scan: return "scan_error";
    case ErrorCode::Config: return "config_error";
    case ErrorCode::Unsupported: return "unsupported";
    case ErrorCode::Cancelled: return "cancelled";
    case ErrorCode::Internal: return "internal_error";
  }
  return "internal_error";
}

std::string_view to_string(ColumnType type) {
  switch (type) {
    case ColumnType::Bool: return "Bool";
    case ColumnType::Int64: return "Int64";
    case ColumnType::Float64: return "Float64";
    case ColumnType::Utf8: return "Utf8";
  }
  return "Utf8";
}

std::optional<ColumnType> parse_column_type(std::string_view name) {
  for (auto t : {ColumnType::Bool, ColumnType::Int64, ColumnType::Float64, ColumnType::Utf8}) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

std::optional<ColumnType> Value::type() const noexcept {
  switch (data_.index()) {
    case 1: return ColumnType::Bool;
    case 2: return ColumnType::Int64;
    case 3: return ColumnType::Float64;
    case 4: return ColumnType::Utf8;
    default: return std::nullopt;
  }
}

double Value::as_double() const {
  if (is_int()) return static_cast<double>(as_int());
  if (is_float()) return as_float();
  throw Error(ErrorCode::Type, "value '" + to_string() + "' is not numeric");
}

bool operator==(const Value& a, const Value& b) { return a.data_ == b.data_; }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string out(buf.data(), end);
  if (out.find_first_of(".e") == std::string::npos) out += ".0";
  return out;
}

std::string Value::to_string() const {
  switch (data_.index()) {
    case 1: return as_bool() ? "true" : "false";
    case 2: return std::to_string(as_int());
    case 3: return format_double(as_float());
    case 4: return as_string();
    default: return "";
  }
}

std::string Value::to_sql_literal() const {
  switch (data_.index()) {
    case 0: return "NULL";
    case 1: return as_bool() ? "TRUE" : "FALSE";
    case 4: {
      std::string out = "'";
      for (char c : as_string()) {
        if (c == '\'') out += '\'';
        out += c;
      }
      return out + "'";
    }
    default: return to_string();
  }
}

std::size_t Value::hash() const noexcept {
  const std::size_t tag = data_.index() * 0x9e3779b97f4a7c15ULL;
  switch (data_.index()) {
    case 1: return tag ^ std::hash<bool>{}(as_bool());
    case 2: return tag ^ std::hash<std::int64_t>{}(as_int());
    case 3: {
      const double d = as_float();
      return tag ^ std::hash<double>{}(d == 0.0 ? 0.0 : d);
    }
    case 4: return tag ^ std::hash<std::string>{}(as_string());
    default: return tag;
  }
}

namespace {

int type_rank(const Value& v) {
  if (v.is_null()) return 0;
  if (v.is_bool()) return 1;
  if (v.is_numeric()) return 2;
  return 3;
}

std::weak_ordering compare_doubles(double a, double b) {
  if (a < b) return std::weak_ordering::less;
  if (a > b) return std::weak_ordering::greater;
  return std::weak_ordering::equivalent;
}

}  // namespace

std::weak_ordering total_order(const Value& a, const Value& b) {
  const int ra = type_rank(a);
  const int rb = type_rank(b);
  if (ra != rb) return ra <=> rb;
  switch (ra) {
    case 0: return std::weak_ordering::equivalent;
    case 1: return a.as_bool() <=> b.as_bool();
    case 2:
      if (a.is_int() && b.is_int()) return a.as_int() <=> b.as_int();
      return compare_doubles(a.as_double(), b.as_double());
    default: {
      const int c = a.as_string().compare(b.as_string());
      return c < 0 ? std::weak_ordering::less
                   : (c > 0 ? std::weak_ordering::greater : std::weak_ordering::equivalent);
    }
  }
}

bool sql_equal(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return false;
  if (a.is_numeric() && b.is_numeric()) {
    if (a.is_int() && b.is_int()) return a.as_int() == b.as_int();
    return a.as_double() == b.as_double();
  }
  return a == b;
}

std::size_t sql_hash(const Value& v) noexcept {
  if (v.is_numeric()) {
    const double d = v.is_int() ? static_cast<double>(v.as_int()) : v.as_float();
    return std::hash<double>{}(d == 0.0 ? 0.0 : d);
  }
  return v.hash();
}

std::optional<std::int64_t> parse_int64(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return out;
}

std::optional<double> parse_float64(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double out = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(out)) return std::nullopt;
  return out;
}

std::optional<bool> parse_bool(std::string_view text) {
  auto iequals = [](std::string_view a, std::string_view b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](char x, char y) {
      return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
    });
  };
  if (iequals(text, "true")) return true;
  if (iequals(text, "false")) return false;
  return std::nullopt;
}

}  // namespace hmdap
