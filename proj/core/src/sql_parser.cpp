#include <algorithm>
#include <array>
#include <cctype>

#include "hmdap/error.hpp"
#include "hmdap/sql.hpp"

namespace hmdap::sql {

namespace {

enum class TokenKind { Identifier, Integer, Float, String, Symbol, End };

struct Token {
  TokenKind kind;
  std::string text;
  SourcePosition pos;
};

constexpr std::array kKeywords = {"SELECT", "FROM", "JOIN",  "INNER", "ON",    "WHERE", "GROUP", "BY",
                                  "WITH",   "ROLLUP", "CUBE", "ORDER", "ASC",   "DESC",  "LIMIT", "AND",
                                  "OR",     "NOT",  "AS",    "TRUE",  "FALSE", "NULL"};

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool is_keyword(std::string_view word) {
  const auto u = upper(word);
  return std::find(kKeywords.begin(), kKeywords.end(), u) != kKeywords.end();
}

std::string describe(const Token& t) {
  if (t.kind == TokenKind::End) return "end of input";
  if (t.kind == TokenKind::String) return "string '" + t.text + "'";
  return "'" + t.text + "'";
}

[[noreturn]] void fail(const SourcePosition& pos, const std::string& message) {
  throw Error(ErrorCode::Syntax,
              "syntax error at " + std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + message,
              pos);
}

std::vector<Token> lex(std::string_view text) {
  std::vector<Token> tokens;
  SourcePosition pos;
  std::size_t i = 0;
  auto advance = [&](std::size_t count) {
    for (std::size_t k = 0; k < count && i < text.size(); ++k, ++i) {
      if (text[i] == '\n') {
        ++pos.line;
        pos.column = 1;
      } else {
        ++pos.column;
      }
    }
  };
  auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };

  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      advance(1);
      continue;
    }
    if (c == '-' && i + 1 < text.size() && text[i + 1] == '-') {  // line comment
      while (i < text.size() && text[i] != '\n') advance(1);
      continue;
    }
    const SourcePosition start = pos;
    if (is_ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && is_ident_char(text[j])) ++j;
      tokens.push_back({TokenKind::Identifier, std::string(text.substr(i, j - i)), start});
      advance(j - i);
      continue;
    }
    if (is_digit(c)) {
      std::size_t j = i;
      bool is_float = false;
      while (j < text.size() && is_digit(text[j])) ++j;
      if (j + 1 < text.size() && text[j] == '.' && is_digit(text[j + 1])) {
        is_float = true;
        ++j;
        while (j < text.size() && is_digit(text[j])) ++j;
      }
      if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < text.size() && is_digit(text[k])) {
          is_float = true;
          j = k;
          while (j < text.size() && is_digit(text[j])) ++j;
        }
      }
      if (j < text.size() && is_ident_start(text[j])) {
        fail(start, "malformed number '" + std::string(text.substr(i, j - i + 1)) + "'");
      }
      tokens.push_back({is_float ? TokenKind::Float : TokenKind::Integer, std::string(text.substr(i, j - i)), start});
      advance(j - i);
      continue;
    }
    if (c == '\'') {
      std::string value;
      advance(1);
      for (;;) {
        if (i >= text.size()) fail(start, "unterminated string literal");
        if (text[i] == '\'') {
          if (i + 1 < text.size() && text[i + 1] == '\'') {
            value += '\'';
            advance(2);
            continue;
          }
          advance(1);
          break;
        }
        value += text[i];
        advance(1);
      }
      tokens.push_back({TokenKind::String, std::move(value), start});
      continue;
    }
    static constexpr std::array<std::string_view, 3> kTwoChar = {"<>", "<=", ">="};
    if (i + 1 < text.size()) {
      const auto two = text.substr(i, 2);
      if (std::find(kTwoChar.begin(), kTwoChar.end(), two) != kTwoChar.end() || two == "!=") {
        tokens.push_back({TokenKind::Symbol, two == "!=" ? std::string("<>") : std::string(two), start});
        advance(2);
        continue;
      }
    }
    if (std::string_view("=<>+-*/(),.;").find(c) != std::string_view::npos) {
      tokens.push_back({TokenKind::Symbol, std::string(1, c), start});
      advance(1);
      continue;
    }
    const auto byte = static_cast<unsigned char>(c);
    if (std::isprint(byte)) fail(start, "unexpected character '" + std::string(1, c) + "'");
    fail(start, "unexpected byte 0x" + std::string(1, "0123456789abcdef"[byte >> 4]) +
                    std::string(1, "0123456789abcdef"[byte & 15]));
  }
  tokens.push_back({TokenKind::End, "", pos});
  return tokens;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  SelectStatement statement() {
    SelectStatement s;
    expect_keyword("SELECT");
    s.select.push_back(select_item());
    while (accept_symbol(",")) s.select.push_back(select_item());
    expect_keyword("FROM");
    s.from = table_name();
    for (;;) {
      if (accept_keyword("INNER")) {
        if (!peek_keyword("JOIN")) fail(peek().pos, "expected JOIN after INNER, found " + describe(peek()));
      }
      if (!accept_keyword("JOIN")) break;
      JoinClause j;
      j.table = table_name();
      expect_keyword("ON");
      do {
        auto lhs = column_name();
        expect_symbol("=");
        auto rhs = column_name();
        j.on.emplace_back(std::move(lhs), std::move(rhs));
      } while (accept_keyword("AND"));
      s.joins.push_back(std::move(j));
    }
    if (accept_keyword("WHERE")) s.where = expression();
    if (accept_keyword("GROUP")) {
      expect_keyword("BY");
      s.group_by.push_back(column_name());
      while (accept_symbol(",")) s.group_by.push_back(column_name());
      if (accept_keyword("WITH")) {
        if (accept_keyword("ROLLUP")) {
          s.group_mode = GroupMode::Rollup;
        } else if (accept_keyword("CUBE")) {
          s.group_mode = GroupMode::Cube;
        } else {
          fail(peek().pos, "expected ROLLUP or CUBE after WITH, found " + describe(peek()));
        }
      }
    }
    if (accept_keyword("ORDER")) {
      expect_keyword("BY");
      do {
        OrderItem item{column_name(), false};
        if (accept_keyword("DESC")) {
          item.descending = true;
        } else {
          accept_keyword("ASC");
        }
        s.order_by.push_back(std::move(item));
      } while (accept_symbol(","));
    }
    if (accept_keyword("LIMIT")) {
      const auto& t = peek();
      if (t.kind != TokenKind::Integer) fail(t.pos, "expected a non-negative integer after LIMIT, found " + describe(t));
      auto n = parse_int64(t.text);
      if (!n) fail(t.pos, "LIMIT value out of range");
      s.limit = *n;
      ++pos_;
    }
    accept_symbol(";");
    if (peek().kind != TokenKind::End) fail(peek().pos, "unexpected " + describe(peek()) + " after end of statement");
    return s;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const { return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)]; }

  bool peek_keyword(std::string_view kw, std::size_t ahead = 0) const {
    const auto& t = peek(ahead);
    return t.kind == TokenKind::Identifier && upper(t.text) == kw;
  }
  bool accept_keyword(std::string_view kw) {
    if (!peek_keyword(kw)) return false;
    ++pos_;
    return true;
  }
  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) fail(peek().pos, "expected " + std::string(kw) + ", found " + describe(peek()));
  }
  bool peek_symbol(std::string_view sym) const {
    return peek().kind == TokenKind::Symbol && peek().text == sym;
  }
  bool accept_symbol(std::string_view sym) {
    if (!peek_symbol(sym)) return false;
    ++pos_;
    return true;
  }
  void expect_symbol(std::string_view sym) {
    if (!accept_symbol(sym)) fail(peek().pos, "expected '" + std::string(sym) + "', found " + describe(peek()));
  }

  std::string identifier(const char* what) {
    const auto& t = peek();
    if (t.kind != TokenKind::Identifier || is_keyword(t.text)) {
      fail(t.pos, std::string("expected ") + what + ", found " + describe(t));
    }
    ++pos_;
    return t.text;
  }

  std::string table_name() { return identifier("table name"); }

  std::string column_name() {
    auto name = identifier("column name");
    if (accept_symbol(".")) name += "." + identifier("column name");
    return name;
  }

  SelectItem select_item() {
    if (accept_symbol("*")) return {nullptr, std::nullopt};
    SelectItem item{expression(), std::nullopt};
    if (accept_keyword("AS")) item.alias = identifier("alias");
    return item;
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p(p) {
      if (++p.depth_ > kMaxExpressionDepth) fail(p.peek().pos, "expression nested too deeply");
    }
    ~DepthGuard() { --p.depth_; }
    Parser& p;
  };

  ExprPtr expression() {
    DepthGuard guard(*this);
    auto lhs = and_expr();
    while (accept_keyword("OR")) lhs = logic_or(lhs, and_expr());
    return lhs;
  }

  ExprPtr and_expr() {
    auto lhs = not_expr();
    while (accept_keyword("AND")) lhs = logic_and(lhs, not_expr());
    return lhs;
  }

  ExprPtr not_expr() {
    DepthGuard guard(*this);
    if (accept_keyword("NOT")) return logic_not(not_expr());
    return comparison();
  }

  ExprPtr comparison() {
    auto lhs = additive();
    static constexpr std::array<std::pair<std::string_view, CompareOp>, 6> kOps = {{{"=", CompareOp::Eq},
                                                                                    {"<>", CompareOp::Ne},
                                                                                    {"<", CompareOp::Lt},
                                                                                    {"<=", CompareOp::Le},
                                                                                    {">", CompareOp::Gt},
                                                                                    {">=", CompareOp::Ge}}};
    for (const auto& [sym, op] : kOps) {
      if (accept_symbol(sym)) return compare(op, lhs, additive());
    }
    return lhs;
  }

  ExprPtr additive() {
    auto lhs = multiplicative();
    for (;;) {
      if (accept_symbol("+")) {
        lhs = arith(ArithOp::Add, lhs, multiplicative());
      } else if (accept_symbol("-")) {
        lhs = arith(ArithOp::Sub, lhs, multiplicative());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr multiplicative() {
    auto lhs = unary();
    for (;;) {
      if (accept_symbol("*")) {
        lhs = arith(ArithOp::Mul, lhs, unary());
      } else if (accept_symbol("/")) {
        lhs = arith(ArithOp::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr unary() {
    DepthGuard guard(*this);
    if (peek_symbol("-")) {
      const auto& next = peek(1);
      if (next.kind == TokenKind::Integer) {
        pos_ += 2;
        auto v = parse_int64("-" + next.text);
        if (!v) fail(next.pos, "integer literal -" + next.text + " out of range");
        return lit(Value(*v));
      }
      if (next.kind == TokenKind::Float) {
        pos_ += 2;
        auto v = parse_float64("-" + next.text);
        if (!v) fail(next.pos, "float literal -" + next.text + " out of range");
        return lit(Value(*v));
      }
      ++pos_;
      return arith(ArithOp::Sub, lit(Value(std::int64_t{0})), unary());
    }
    return primary();
  }

  ExprPtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::Integer: {
        auto v = parse_int64(t.text);
        if (!v) fail(t.pos, "integer literal " + t.text + " out of range");
        ++pos_;
        return lit(Value(*v));
      }
      case TokenKind::Float: {
        auto v = parse_float64(t.text);
        if (!v) fail(t.pos, "float literal " + t.text + " out of range");
        ++pos_;
        return lit(Value(*v));
      }
      case TokenKind::String: ++pos_; return lit(Value(t.text));
      case TokenKind::Symbol:
        if (accept_symbol("(")) {
          auto e = expression();
          expect_symbol(")");
          return e;
        }
        fail(t.pos, "expected an expression, found " + describe(t));
      case TokenKind::End: fail(t.pos, "expected an expression, found end of input");
      case TokenKind::Identifier: break;
    }
    const auto word = upper(t.text);
    if (word == "TRUE" || word == "FALSE") {
      ++pos_;
      return lit(Value(word == "TRUE"));
    }
    if (word == "NULL") {
      ++pos_;
      return lit(Value::null());
    }
    if (peek(1).kind == TokenKind::Symbol && peek(1).text == "(") {
      static constexpr std::array<std::pair<std::string_view, AggFunc>, 5> kFuncs = {{{"COUNT", AggFunc::Count},
                                                                                      {"SUM", AggFunc::Sum},
                                                                                      {"AVG", AggFunc::Avg},
                                                                                      {"MIN", AggFunc::Min},
                                                                                      {"MAX", AggFunc::Max}}};
      auto it = std::find_if(kFuncs.begin(), kFuncs.end(), [&](const auto& f) { return f.first == word; });
      if (it == kFuncs.end()) fail(t.pos, "unknown function '" + t.text + "'");
      pos_ += 2;
      ExprPtr arg;
      if (it->second == AggFunc::Count && accept_symbol("*")) {
        arg = nullptr;
      } else {
        arg = expression();
      }
      expect_symbol(")");
      return aggregate(it->second, arg);
    }
    return col(column_name());
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

}  // namespace

SelectStatement parse_sql(std::string_view text) { return Parser(lex(text)).statement(); }

std::string print_sql(const SelectStatement& s) {
  std::string out = "SELECT ";
  for (std::size_t i = 0; i < s.select.size(); ++i) {
    if (i) out += ", ";
    const auto& item = s.select[i];
    out += item.expr ? to_sql(*item.expr) : "*";
    if (item.alias) out += " AS " + *item.alias;
  }
  out += " FROM " + s.from;
  for (const auto& j : s.joins) {
    out += " JOIN " + j.table + " ON ";
    for (std::size_t i = 0; i < j.on.size(); ++i) {
      if (i) out += " AND ";
      out += j.on[i].first + " = " + j.on[i].second;
    }
  }
  if (s.where) out += " WHERE " + to_sql(*s.where);
  if (!s.group_by.empty()) {
    out += " GROUP BY ";
    for (std::size_t i = 0; i < s.group_by.size(); ++i) out += (i ? ", " : "") + s.group_by[i];
    if (s.group_mode == GroupMode::Rollup) out += " WITH ROLLUP";
    if (s.group_mode == GroupMode::Cube) out += " WITH CUBE";
  }
  if (!s.order_by.empty()) {
    out += " ORDER BY ";
    for (std::size_t i = 0; i < s.order_by.size(); ++i) {
      out += (i ? ", " : "") + s.order_by[i].column + (s.order_by[i].descending ? " DESC" : " ASC");
    }
  }
  if (s.limit) out += " LIMIT " + std::to_string(*s.limit);
  return out;
}

bool ast_equal(const SelectStatement& a, const SelectStatement& b) {
  if (a.select.size() != b.select.size()) return false;
  for (std::size_t i = 0; i < a.select.size(); ++i) {
    const auto& x = a.select[i];
    const auto& y = b.select[i];
    if (x.alias != y.alias || bool(x.expr) != bool(y.expr)) return false;
    if (x.expr && !expr_equal(*x.expr, *y.expr)) return false;
  }
  if (a.from != b.from || a.joins.size() != b.joins.size()) return false;
  for (std::size_t i = 0; i < a.joins.size(); ++i) {
    if (a.joins[i].table != b.joins[i].table || a.joins[i].on != b.joins[i].on) return false;
  }
  if (bool(a.where) != bool(b.where) || (a.where && !expr_equal(*a.where, *b.where))) return false;
  if (a.group_by != b.group_by || a.group_mode != b.group_mode || a.limit != b.limit) return false;
  if (a.order_by.size() != b.order_by.size()) return false;
  for (std::size_t i = 0; i < a.order_by.size(); ++i) {
    if (a.order_by[i].column != b.order_by[i].column || a.order_by[i].descending != b.order_by[i].descending) {
      return false;
    }
  }
  return true;
}

}  // namespace hmdap::sql
