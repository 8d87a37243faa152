#include "hmdap/expression.hpp"

#include <cmath>
#include <limits>

#include "hmdap/error.hpp"

namespace hmdap {

std::string_view to_string(ArithOp op) {
  switch (op) {
    case ArithOp::Add: return "+";
    case ArithOp::Sub: return "-";
    case ArithOp::Mul: return "*";
    case ArithOp::Div: return "/";
  }
  return "?";
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "<>";
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
  }
  return "?";
}

std::string_view to_string(LogicOp op) {
  switch (op) {
    case LogicOp::And: return "AND";
    case LogicOp::Or: return "OR";
    case LogicOp::Not: return "NOT";
  }
  return "?";
}

std::string_view to_string(AggFunc f) {
  switch (f) {
    case AggFunc::Count: return "COUNT";
    case AggFunc::Sum: return "SUM";
    case AggFunc::Avg: return "AVG";
    case AggFunc::Min: return "MIN";
    case AggFunc::Max: return "MAX";
  }
  return "?";
}

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

ExprPtr make(auto node) { return std::make_shared<const Expression>(Expression{std::move(node)}); }
}  // namespace

ExprPtr col(std::string name) { return make(ColumnRef{std::move(name)}); }
ExprPtr lit(Value v) { return make(Literal{std::move(v)}); }
ExprPtr arith(ArithOp op, ExprPtr lhs, ExprPtr rhs) { return make(Arith{op, std::move(lhs), std::move(rhs)}); }
ExprPtr compare(CompareOp op, ExprPtr lhs, ExprPtr rhs) {
  return make(Compare{op, std::move(lhs), std::move(rhs)});
}
ExprPtr logic_and(ExprPtr lhs, ExprPtr rhs) { return make(Logic{LogicOp::And, {std::move(lhs), std::move(rhs)}}); }
ExprPtr logic_or(ExprPtr lhs, ExprPtr rhs) { return make(Logic{LogicOp::Or, {std::move(lhs), std::move(rhs)}}); }
ExprPtr logic_not(ExprPtr arg) { return make(Logic{LogicOp::Not, {std::move(arg)}}); }
ExprPtr aggregate(AggFunc f, ExprPtr arg) { return make(Aggregate{f, std::move(arg)}); }

std::string to_sql(const Expression& e) {
  return std::visit(
      overloaded{
          [](const ColumnRef& c) { return c.name; },
          [](const Literal& l) { return l.value.to_sql_literal(); },
          [](const Arith& a) {
            return "(" + to_sql(*a.lhs) + " " + std::string(to_string(a.op)) + " " + to_sql(*a.rhs) + ")";
          },
          [](const Compare& c) {
            return "(" + to_sql(*c.lhs) + " " + std::string(to_string(c.op)) + " " + to_sql(*c.rhs) + ")";
          },
          [](const Logic& l) {
            if (l.op == LogicOp::Not) return "(NOT " + to_sql(*l.args[0]) + ")";
            return "(" + to_sql(*l.args[0]) + " " + std::string(to_string(l.op)) + " " + to_sql(*l.args[1]) + ")";
          },
          [](const Aggregate& a) {
            return std::string(to_string(a.func)) + "(" + (a.arg ? to_sql(*a.arg) : std::string("*")) + ")";
          },
      },
      e.node);
}

bool expr_equal(const Expression& a, const Expression& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      overloaded{
          [&](const ColumnRef& x) { return x.name == std::get<ColumnRef>(b.node).name; },
          [&](const Literal& x) { return x.value == std::get<Literal>(b.node).value; },
          [&](const Arith& x) {
            const auto& y = std::get<Arith>(b.node);
            return x.op == y.op && expr_equal(*x.lhs, *y.lhs) && expr_equal(*x.rhs, *y.rhs);
          },
          [&](const Compare& x) {
            const auto& y = std::get<Compare>(b.node);
            return x.op == y.op && expr_equal(*x.lhs, *y.lhs) && expr_equal(*x.rhs, *y.rhs);
          },
          [&](const Logic& x) {
            const auto& y = std::get<Logic>(b.node);
            if (x.op != y.op || x.args.size() != y.args.size()) return false;
            for (std::size_t i = 0; i < x.args.size(); ++i) {
              if (!expr_equal(*x.args[i], *y.args[i])) return false;
            }
            return true;
          },
          [&](const Aggregate& x) {
            const auto& y = std::get<Aggregate>(b.node);
            if (x.func != y.func || bool(x.arg) != bool(y.arg)) return false;
            return !x.arg || expr_equal(*x.arg, *y.arg);
          },
      },
      a.node);
}

bool contains_aggregate(const Expression& e) {
  return std::visit(overloaded{
                        [](const ColumnRef&) { return false; },
                        [](const Literal&) { return false; },
                        [](const Arith& a) { return contains_aggregate(*a.lhs) || contains_aggregate(*a.rhs); },
                        [](const Compare& c) { return contains_aggregate(*c.lhs) || contains_aggregate(*c.rhs); },
                        [](const Logic& l) {
                          for (const auto& a : l.args) {
                            if (contains_aggregate(*a)) return true;
                          }
                          return false;
                        },
                        [](const Aggregate&) { return true; },
                    },
                    e.node);
}

void collect_columns(const Expression& e, std::set<std::string>& out) {
  std::visit(overloaded{
                 [&](const ColumnRef& c) { out.insert(c.name); },
                 [](const Literal&) {},
                 [&](const Arith& a) {
                   collect_columns(*a.lhs, out);
                   collect_columns(*a.rhs, out);
                 },
                 [&](const Compare& c) {
                   collect_columns(*c.lhs, out);
                   collect_columns(*c.rhs, out);
                 },
                 [&](const Logic& l) {
                   for (const auto& a : l.args) collect_columns(*a, out);
                 },
                 [&](const Aggregate& a) {
                   if (a.arg) collect_columns(*a.arg, out);
                 },
             },
             e.node);
}

std::set<std::string> referenced_columns(const Expression& e) {
  std::set<std::string> out;
  collect_columns(e, out);
  return out;
}

std::vector<ExprPtr> split_conjuncts(const ExprPtr& e) {
  std::vector<ExprPtr> out;
  if (!e) return out;
  if (const auto* l = std::get_if<Logic>(&e->node); l && l->op == LogicOp::And) {
    for (const auto& a : l->args) {
      auto sub = split_conjuncts(a);
      out.insert(out.end(), sub.begin(), sub.end());
    }
  } else {
    out.push_back(e);
  }
  return out;
}

ExprPtr conjoin(const std::vector<ExprPtr>& conjuncts) {
  ExprPtr out;
  for (const auto& c : conjuncts) out = out ? logic_and(out, c) : c;
  return out;
}

ExprPtr rewrite_columns(const ExprPtr& e,
                        const std::function<std::optional<std::string>(const std::string&)>& rename) {
  return std::visit(overloaded{
                        [&](const ColumnRef& c) -> ExprPtr {
                          if (auto n = rename(c.name)) return col(*n);
                          return e;
                        },
                        [&](const Literal&) { return e; },
                        [&](const Arith& a) {
                          return arith(a.op, rewrite_columns(a.lhs, rename), rewrite_columns(a.rhs, rename));
                        },
                        [&](const Compare& c) {
                          return compare(c.op, rewrite_columns(c.lhs, rename), rewrite_columns(c.rhs, rename));
                        },
                        [&](const Logic& l) {
                          Logic out{l.op, {}};
                          for (const auto& a : l.args) out.args.push_back(rewrite_columns(a, rename));
                          return make(std::move(out));
                        },
                        [&](const Aggregate& a) {
                          return aggregate(a.func, a.arg ? rewrite_columns(a.arg, rename) : nullptr);
                        },
                    },
                    e->node);
}

namespace {

std::string type_name(std::optional<ColumnType> t) { return t ? std::string(to_string(*t)) : "NULL"; }

bool comparable(std::optional<ColumnType> a, std::optional<ColumnType> b) {
  if (!a || !b) return true;
  if (is_numeric(*a) && is_numeric(*b)) return true;
  return *a == *b;
}

}  // namespace

std::optional<ColumnType> infer_type(const Expression& e, const Schema& schema) {
  return std::visit(
      overloaded{
          [&](const ColumnRef& c) -> std::optional<ColumnType> { return schema[schema.index_of(c.name)].type; },
          [&](const Literal& l) { return l.value.type(); },
          [&](const Arith& a) -> std::optional<ColumnType> {
            auto lt = infer_type(*a.lhs, schema);
            auto rt = infer_type(*a.rhs, schema);
            if ((lt && !is_numeric(*lt)) || (rt && !is_numeric(*rt))) {
              throw Error(ErrorCode::Type, "operator " + std::string(to_string(a.op)) + " requires numeric operands, got " +
                                               type_name(lt) + " and " + type_name(rt) + " in " + to_sql(e));
            }
            if (!lt && !rt) return std::nullopt;
            if (lt == ColumnType::Float64 || rt == ColumnType::Float64) return ColumnType::Float64;
            return ColumnType::Int64;
          },
          [&](const Compare& c) -> std::optional<ColumnType> {
            auto lt = infer_type(*c.lhs, schema);
            auto rt = infer_type(*c.rhs, schema);
            if (!comparable(lt, rt)) {
              throw Error(ErrorCode::Type, "cannot compare " + type_name(lt) + " with " + type_name(rt) + " in " +
                                               to_sql(e));
            }
            return ColumnType::Bool;
          },
          [&](const Logic& l) -> std::optional<ColumnType> {
            for (const auto& a : l.args) {
              auto t = infer_type(*a, schema);
              if (t && *t != ColumnType::Bool) {
                throw Error(ErrorCode::Type, std::string(to_string(l.op)) + " requires Bool operands, got " +
                                                 type_name(t) + " in " + to_sql(e));
              }
            }
            return ColumnType::Bool;
          },
          [&](const Aggregate& a) -> std::optional<ColumnType> {
            if (!a.arg) return ColumnType::Int64;
            if (contains_aggregate(*a.arg)) {
              throw Error(ErrorCode::Plan, "aggregate functions cannot be nested: " + to_sql(e));
            }
            auto t = infer_type(*a.arg, schema);
            switch (a.func) {
              case AggFunc::Count: return ColumnType::Int64;
              case AggFunc::Sum:
              case AggFunc::Avg:
                if (t && !is_numeric(*t)) {
                  throw Error(ErrorCode::Type, std::string(to_string(a.func)) + " requires a numeric argument, got " +
                                                   type_name(t));
                }
                if (a.func == AggFunc::Avg) return ColumnType::Float64;
                return t ? *t : ColumnType::Int64;
              case AggFunc::Min:
              case AggFunc::Max: return t;
            }
            return t;
          },
      },
      e.node);
}

Value apply_arith(ArithOp op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return Value::null();
  if (!a.is_numeric() || !b.is_numeric()) {
    throw Error(ErrorCode::Type, "operator " + std::string(to_string(op)) + " applied to non-numeric value");
  }
  if (a.is_int() && b.is_int()) {
    const std::int64_t x = a.as_int();
    const std::int64_t y = b.as_int();
    std::int64_t r = 0;
    bool overflow = false;
    switch (op) {
      case ArithOp::Add: overflow = __builtin_add_overflow(x, y, &r); break;
      case ArithOp::Sub: overflow = __builtin_sub_overflow(x, y, &r); break;
      case ArithOp::Mul: overflow = __builtin_mul_overflow(x, y, &r); break;
      case ArithOp::Div:
        if (y == 0) throw Error(ErrorCode::Runtime, "integer division by zero");
        if (x == std::numeric_limits<std::int64_t>::min() && y == -1) {
          overflow = true;
        } else {
          r = x / y;
        }
        break;
    }
    if (overflow) throw Error(ErrorCode::Runtime, "Int64 overflow in operator " + std::string(to_string(op)));
    return Value(r);
  }
  const double x = a.as_double();
  const double y = b.as_double();
  double r = 0;
  switch (op) {
    case ArithOp::Add: r = x + y; break;
    case ArithOp::Sub: r = x - y; break;
    case ArithOp::Mul: r = x * y; break;
    case ArithOp::Div:
      if (y == 0.0) throw Error(ErrorCode::Runtime, "division by zero");
      r = x / y;
      break;
  }
  if (!std::isfinite(r)) throw Error(ErrorCode::Runtime, "Float64 overflow in operator " + std::string(to_string(op)));
  return Value(r);
}

Value apply_compare(CompareOp op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return Value::null();
  const bool numeric = a.is_numeric() && b.is_numeric();
  if (!numeric && a.type() != b.type()) throw Error(ErrorCode::Type, "cannot compare values of different types");
  const auto c = total_order(a, b);
  switch (op) {
    case CompareOp::Eq: return Value(c == 0);
    case CompareOp::Ne: return Value(c != 0);
    case CompareOp::Lt: return Value(c < 0);
    case CompareOp::Le: return Value(c <= 0);
    case CompareOp::Gt: return Value(c > 0);
    case CompareOp::Ge: return Value(c >= 0);
  }
  return Value::null();
}

struct BoundExpression::Node {
  enum class Kind { Column, Literal, Arith, Compare, And, Or, Not } kind;
  std::size_t index = 0;
  Value value;
  ArithOp arith_op = ArithOp::Add;
  CompareOp compare_op = CompareOp::Eq;
  std::vector<std::shared_ptr<const Node>> children;
};

namespace {

using BoundNode = BoundExpression::Node;

std::shared_ptr<const BoundNode> bind_node(const Expression& e, const Schema& schema) {
  auto n = std::make_shared<BoundNode>();
  std::visit(overloaded{
                 [&](const ColumnRef& c) {
                   n->kind = BoundNode::Kind::Column;
                   n->index = schema.index_of(c.name);
                 },
                 [&](const Literal& l) {
                   n->kind = BoundNode::Kind::Literal;
                   n->value = l.value;
                 },
                 [&](const Arith& a) {
                   n->kind = BoundNode::Kind::Arith;
                   n->arith_op = a.op;
                   n->children = {bind_node(*a.lhs, schema), bind_node(*a.rhs, schema)};
                 },
                 [&](const Compare& c) {
                   n->kind = BoundNode::Kind::Compare;
                   n->compare_op = c.op;
                   n->children = {bind_node(*c.lhs, schema), bind_node(*c.rhs, schema)};
                 },
                 [&](const Logic& l) {
                   n->kind = l.op == LogicOp::And  ? BoundNode::Kind::And
                             : l.op == LogicOp::Or ? BoundNode::Kind::Or
                                                   : BoundNode::Kind::Not;
                   for (const auto& a : l.args) n->children.push_back(bind_node(*a, schema));
                 },
                 [&](const Aggregate&) {
                   throw Error(ErrorCode::Plan, "aggregate " + to_sql(e) + " is not allowed in a scalar context");
                 },
             },
             e.node);
  return n;
}

// Three-valued truth: 1 true, 0 false, -1 unknown.
int truth(const Value& v) {
  if (v.is_null()) return -1;
  if (!v.is_bool()) throw Error(ErrorCode::Type, "logical operator applied to non-Bool value");
  return v.as_bool() ? 1 : 0;
}

Value from_truth(int t) { return t < 0 ? Value::null() : Value(t == 1); }

Value eval_node(const BoundNode& n, const Row& row) {
  switch (n.kind) {
    case BoundNode::Kind::Column: return row[n.index];
    case BoundNode::Kind::Literal: return n.value;
    case BoundNode::Kind::Arith:
      return apply_arith(n.arith_op, eval_node(*n.children[0], row), eval_node(*n.children[1], row));
    case BoundNode::Kind::Compare:
      return apply_compare(n.compare_op, eval_node(*n.children[0], row), eval_node(*n.children[1], row));
    case BoundNode::Kind::And: {
      const int a = truth(eval_node(*n.children[0], row));
      const int b = truth(eval_node(*n.children[1], row));
      if (a == 0 || b == 0) return Value(false);
      return from_truth(a < 0 || b < 0 ? -1 : 1);
    }
    case BoundNode::Kind::Or: {
      const int a = truth(eval_node(*n.children[0], row));
      const int b = truth(eval_node(*n.children[1], row));
      if (a == 1 || b == 1) return Value(true);
      return from_truth(a < 0 || b < 0 ? -1 : 0);
    }
    case BoundNode::Kind::Not: {
      const int a = truth(eval_node(*n.children[0], row));
      return from_truth(a < 0 ? -1 : 1 - a);
    }
  }
  return Value::null();
}

}  // namespace

Value BoundExpression::eval(const Row& row) const { return eval_node(*root_, row); }

BoundExpression bind(const Expression& e, const Schema& schema) { return BoundExpression(bind_node(e, schema)); }

Value eval_expression(const Expression& e, const Row& row, const Schema& schema) {
  if (row.size() != schema.size()) {
    throw Error(ErrorCode::InvalidArgument, "row width does not match schema");
  }
  return bind(e, schema).eval(row);
}

}  // namespace hmdap
