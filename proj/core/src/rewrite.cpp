#include <algorithm>
#include <set>

#include "hmdap/error.hpp"
#include "hmdap/optimizer.hpp"

namespace hmdap::opt {

namespace {

bool resolves_in(const Expression& e, const Schema& schema) {
  for (const auto& c : referenced_columns(e)) {
    if (!schema.contains(c)) return false;
  }
  return true;
}

PlanPtr apply_filters(PlanPtr node, const std::vector<ExprPtr>& conjuncts) {
  if (conjuncts.empty()) return node;
  return make_filter(std::move(node), conjoin(conjuncts));
}

PlanPtr with_inputs(const PlanPtr& node, std::vector<PlanPtr> inputs) {
  return std::visit(
      [&](const auto& op) -> PlanPtr {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, ScanOp>) {
          return node;
        } else if constexpr (std::is_same_v<T, FilterOp>) {
          return make_filter(inputs[0], op.predicate);
        } else if constexpr (std::is_same_v<T, ProjectOp>) {
          std::vector<std::string> names;
          for (const auto& c : node->schema.columns()) names.push_back(c.name);
          return make_project(inputs[0], op.exprs, std::move(names));
        } else if constexpr (std::is_same_v<T, JoinOp>) {
          return make_join(inputs[0], inputs[1], op.keys);
        } else if constexpr (std::is_same_v<T, AggregateOp>) {
          std::vector<std::string> names;
          const std::size_t first = op.group_cols.size();
          for (std::size_t i = 0; i < op.aggregates.size(); ++i) names.push_back(node->schema[first + i].name);
          return make_aggregate(inputs[0], op.group_cols, op.mode, op.aggregates, std::move(names));
        } else if constexpr (std::is_same_v<T, SortOp>) {
          return make_sort(inputs[0], op.keys);
        } else {
          return make_limit(inputs[0], op.count);
        }
      },
      node->op);
}

PlanPtr push(const PlanPtr& node, std::vector<ExprPtr> pending) {
  if (const auto* f = node->as<FilterOp>()) {
    for (auto& c : split_conjuncts(f->predicate)) pending.push_back(std::move(c));
    return push(node->inputs[0], std::move(pending));
  }
  if (node->as<JoinOp>()) {
    const auto& l = node->inputs[0];
    const auto& r = node->inputs[1];
    std::vector<ExprPtr> to_left, to_right, stay;
    for (auto& c : pending) {
      if (resolves_in(*c, l->schema)) to_left.push_back(std::move(c));
      else if (resolves_in(*c, r->schema)) to_right.push_back(std::move(c));
      else stay.push_back(std::move(c));
    }
    return apply_filters(with_inputs(node, {push(l, std::move(to_left)), push(r, std::move(to_right))}), stay);
  }
  if (node->as<SortOp>()) return with_inputs(node, {push(node->inputs[0], std::move(pending))});
  std::vector<PlanPtr> inputs;
  for (const auto& in : node->inputs) inputs.push_back(push(in, {}));
  return apply_filters(with_inputs(node, std::move(inputs)), pending);
}

struct JoinRegion {
  std::vector<PlanPtr> leaves;
  std::vector<JoinKey> keys;
  std::vector<ExprPtr> residual;
};

bool filters_over_join(const LogicalNode& node) {
  if (node.as<JoinOp>()) return true;
  if (node.as<FilterOp>()) return filters_over_join(*node.inputs[0]);
  return false;
}

PlanPtr reorder(const PlanPtr& node, const StatsMap& stats);

void collect_region(const PlanPtr& node, const StatsMap& stats, JoinRegion& region) {
  if (const auto* j = node->as<JoinOp>()) {
    region.keys.insert(region.keys.end(), j->keys.begin(), j->keys.end());
    collect_region(node->inputs[0], stats, region);
    collect_region(node->inputs[1], stats, region);
    return;
  }
  if (const auto* f = node->as<FilterOp>(); f && filters_over_join(*node)) {
    for (auto& c : split_conjuncts(f->predicate)) region.residual.push_back(std::move(c));
    collect_region(node->inputs[0], stats, region);
    return;
  }
  region.leaves.push_back(reorder(node, stats));
}

/// Projects `plan` onto `target`'s column order when the two differ.
PlanPtr restore_order(PlanPtr plan, const Schema& target) {
  if (plan->schema == target) return plan;
  std::vector<ExprPtr> exprs;
  std::vector<std::string> names;
  for (const auto& c : target.columns()) {
    exprs.push_back(col(c.name));
    names.push_back(c.name);
  }
  return make_project(std::move(plan), std::move(exprs), std::move(names));
}

PlanPtr reorder(const PlanPtr& node, const StatsMap& stats) {
  if (!node->as<JoinOp>() && !(node->as<FilterOp>() && filters_over_join(*node))) {
    std::vector<PlanPtr> inputs;
    for (const auto& in : node->inputs) inputs.push_back(reorder(in, stats));
    return node->inputs.empty() ? node : with_inputs(node, std::move(inputs));
  }
  JoinRegion region;
  collect_region(node, stats, region);
  PlanPtr joined;
  try {
    joined = choose_join_order(region.leaves, region.keys, stats);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Plan) throw;
    // Missing statistics or an unsupported graph: keep the written order.
    std::vector<PlanPtr> inputs;
    for (const auto& in : node->inputs) inputs.push_back(reorder(in, stats));
    return with_inputs(node, std::move(inputs));
  }
  return restore_order(push(apply_filters(joined, region.residual), {}), node->schema);
}

/// Rebuilds `node` so that its schema contains at least `required`.
PlanPtr prune(const PlanPtr& node, const std::set<std::string>& required) {
  auto need_with = [&](const auto& extra) {
    std::set<std::string> need = required;
    need.insert(extra.begin(), extra.end());
    return need;
  };
  if (node->as<ScanOp>()) {
    std::vector<ExprPtr> exprs;
    std::vector<std::string> names;
    for (const auto& c : node->schema.columns()) {
      if (required.count(c.name)) {
        exprs.push_back(col(c.name));
        names.push_back(c.name);
      }
    }
    if (exprs.size() == node->schema.size()) return node;
    if (exprs.empty()) {
      exprs.push_back(col(node->schema[0].name));
      names.push_back(node->schema[0].name);
    }
    return make_project(node, std::move(exprs), std::move(names));
  }
  if (const auto* f = node->as<FilterOp>()) {
    return make_filter(prune(node->inputs[0], need_with(referenced_columns(*f->predicate))), f->predicate);
  }
  if (const auto* p = node->as<ProjectOp>()) {
    std::vector<ExprPtr> exprs;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < p->exprs.size(); ++i) {
      if (required.count(node->schema[i].name)) {
        exprs.push_back(p->exprs[i]);
        names.push_back(node->schema[i].name);
      }
    }
    if (exprs.empty()) {
      exprs.push_back(p->exprs[0]);
      names.push_back(node->schema[0].name);
    }
    std::set<std::string> need;
    for (const auto& e : exprs) collect_columns(*e, need);
    return make_project(prune(node->inputs[0], need), std::move(exprs), std::move(names));
  }
  if (const auto* j = node->as<JoinOp>()) {
    std::set<std::string> need = required;
    for (const auto& k : j->keys) {
      need.insert(k.left);
      need.insert(k.right);
    }
    std::set<std::string> left, right;
    for (const auto& n : need) {
      if (node->inputs[0]->schema.contains(n)) left.insert(n);
      else if (node->inputs[1]->schema.contains(n)) right.insert(n);
    }
    return make_join(prune(node->inputs[0], left), prune(node->inputs[1], right), j->keys);
  }
  if (const auto* a = node->as<AggregateOp>()) {
    std::set<std::string> need(a->group_cols.begin(), a->group_cols.end());
    for (const auto& e : a->aggregates) collect_columns(*e, need);
    return with_inputs(node, {prune(node->inputs[0], need)});
  }
  if (const auto* s = node->as<SortOp>()) {
    std::set<std::string> need = required;
    for (const auto& k : s->keys) need.insert(k.column);
    return with_inputs(node, {prune(node->inputs[0], need)});
  }
  return with_inputs(node, {prune(node->inputs[0], required)});
}

}  // namespace

PlanPtr push_down_predicates(const PlanPtr& plan) { return push(plan, {}); }

PlanPtr reorder_joins(const PlanPtr& plan, const StatsMap& stats) { return reorder(plan, stats); }

PlanPtr prune_columns(const PlanPtr& plan) {
  std::set<std::string> all;
  for (const auto& c : plan->schema.columns()) all.insert(c.name);
  return restore_order(prune(plan, all), plan->schema);
}

PlanPtr optimize(const PlanPtr& plan, const StatsMap& stats) {
  PlanPtr current = plan;
  for (auto pass : {+[](const PlanPtr& p, const StatsMap&) { return push_down_predicates(p); },
                    +[](const PlanPtr& p, const StatsMap& s) { return reorder_joins(p, s); },
                    +[](const PlanPtr& p, const StatsMap&) { return prune_columns(p); }}) {
    try {
      current = pass(current, stats);
    } catch (const Error&) {
      // Each pass is optional; an identity step is always legal.
    }
  }
  return current;
}

}  // namespace hmdap::opt
