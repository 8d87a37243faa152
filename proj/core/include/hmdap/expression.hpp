#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "hmdap/relation.hpp"
#include "hmdap/value.hpp"

namespace hmdap {

enum class ArithOp { Add, Sub, Mul, Div };
enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };
enum class LogicOp { And, Or, Not };
enum class AggFunc { Count, Sum, Avg, Min, Max };

std::string_view to_string(ArithOp op);
std::string_view to_string(CompareOp op);
std::string_view to_string(LogicOp op);
std::string_view to_string(AggFunc f);

struct Expression;
using ExprPtr = std::shared_ptr<const Expression>;

struct ColumnRef {
  std::string name;
};
struct Literal {
  Value value;
};
struct Arith {
  ArithOp op;
  ExprPtr lhs, rhs;
};
struct Compare {
  CompareOp op;
  ExprPtr lhs, rhs;
};
/// NOT carries exactly one argument, AND/OR exactly two.
struct Logic {
  LogicOp op;
  std::vector<ExprPtr> args;
};
/// A null argument means COUNT(*).
struct Aggregate {
  AggFunc func;
  ExprPtr arg;
};

/// Immutable scalar/aggregate expression tree. Columns are referenced by name
/// and bound to positions against a schema before evaluation.
struct Expression {
  std::variant<ColumnRef, Literal, Arith, Compare, Logic, Aggregate> node;
};

ExprPtr col(std::string name);
ExprPtr lit(Value v);
ExprPtr arith(ArithOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr compare(CompareOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr logic_and(ExprPtr lhs, ExprPtr rhs);
ExprPtr logic_or(ExprPtr lhs, ExprPtr rhs);
ExprPtr logic_not(ExprPtr arg);
ExprPtr aggregate(AggFunc f, ExprPtr arg);

/// Fully parenthesised SQL rendering; parses back to an identical tree.
std::string to_sql(const Expression& e);
bool expr_equal(const Expression& a, const Expression& b);

bool contains_aggregate(const Expression& e);
void collect_columns(const Expression& e, std::set<std::string>& out);
std::set<std::string> referenced_columns(const Expression& e);

/// Splits nested ANDs into a flat conjunct list.
std::vector<ExprPtr> split_conjuncts(const ExprPtr& e);
/// Inverse of split_conjuncts; empty input yields nullptr.
ExprPtr conjoin(const std::vector<ExprPtr>& conjuncts);

/// Renames ColumnRefs through `rename` (returns nullopt to keep a name).
ExprPtr rewrite_columns(const ExprPtr& e,
                        const std::function<std::optional<std::string>(const std::string&)>& rename);

/// Static type of an expression: nullopt when the value is always NULL (a
/// bare NULL literal). Throws Type errors on mismatches and Plan errors on
/// unresolved columns.
std::optional<ColumnType> infer_type(const Expression& e, const Schema& schema);

/// Expression with column references resolved to row positions.
class BoundExpression {
 public:
  Value eval(const Row& row) const;

  struct Node;
  explicit BoundExpression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

 private:
  std::shared_ptr<const Node> root_;
};

/// Resolves columns; rejects Aggregate nodes.
BoundExpression bind(const Expression& e, const Schema& schema);

/// Evaluates a scalar expression under SQL three-valued logic.
Value eval_expression(const Expression& e, const Row& row, const Schema& schema);

/// Scalar kernels shared by evaluation and constant folding.
Value apply_arith(ArithOp op, const Value& a, const Value& b);
Value apply_compare(CompareOp op, const Value& a, const Value& b);

}  // namespace hmdap
