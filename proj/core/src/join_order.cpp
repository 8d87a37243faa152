#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <optional>

#include "hmdap/error.hpp"
#include "hmdap/optimizer.hpp"

namespace hmdap::opt {

namespace {

using Mask = std::uint32_t;

std::string leaf_label(const LogicalNode& node) {
  if (const auto* s = node.as<ScanOp>()) return s->table;
  if (node.inputs.empty()) return "?";
  return leaf_label(*node.inputs[0]);
}

struct Edge {
  std::size_t a, b;
  std::string col_a, col_b;
};

struct Candidate {
  PlanPtr plan;
  double cost = 0.0;
  std::string signature;

  bool better_than(const Candidate& other) const {
    if (!other.plan) return true;
    if (cost != other.cost) return cost < other.cost;
    return signature < other.signature;
  }
};

class JoinGraph {
 public:
  JoinGraph(const std::vector<PlanPtr>& relations, const std::vector<JoinKey>& keys) : relations_(relations) {
    for (const auto& k : keys) {
      const auto a = owner(k.left);
      const auto b = owner(k.right);
      if (a == b) {
        throw Error(ErrorCode::InvalidArgument,
                    "join edge " + k.left + " = " + k.right + " does not connect two relations");
      }
      edges_.push_back({a, b, k.left, k.right});
    }
  }

  std::size_t size() const { return relations_.size(); }

  /// Keys joining `left` to `right`, oriented left-to-right; empty when the
  /// two sets are not adjacent.
  std::vector<JoinKey> keys_between(Mask left, Mask right) const {
    std::vector<JoinKey> out;
    for (const auto& e : edges_) {
      const Mask ma = Mask{1} << e.a;
      const Mask mb = Mask{1} << e.b;
      if ((left & ma) && (right & mb)) out.push_back({e.col_a, e.col_b});
      else if ((left & mb) && (right & ma)) out.push_back({e.col_b, e.col_a});
    }
    return out;
  }

  bool connected(Mask set) const {
    if (set == 0) return false;
    Mask seen = set & (~set + 1);
    for (bool grew = true; grew;) {
      grew = false;
      for (const auto& e : edges_) {
        const Mask ma = Mask{1} << e.a;
        const Mask mb = Mask{1} << e.b;
        if (!(set & ma) || !(set & mb)) continue;
        if ((seen & ma) && !(seen & mb)) {
          seen |= mb;
          grew = true;
        } else if ((seen & mb) && !(seen & ma)) {
          seen |= ma;
          grew = true;
        }
      }
    }
    return seen == set;
  }

 private:
  std::size_t owner(const std::string& column) const {
    std::optional<std::size_t> found;
    for (std::size_t i = 0; i < relations_.size(); ++i) {
      if (!relations_[i]->schema.contains(column)) continue;
      if (found) throw Error(ErrorCode::Plan, "join column '" + column + "' is ambiguous");
      found = i;
    }
    if (!found) throw Error(ErrorCode::Plan, "join column '" + column + "' not found in any relation");
    return *found;
  }

  const std::vector<PlanPtr>& relations_;
  std::vector<Edge> edges_;
};

Candidate make_leaf(const PlanPtr& plan, const StatsMap& stats) {
  return {plan, plan_cost(*plan, stats), leaf_label(*plan)};
}

Candidate combine(const Candidate& l, const Candidate& r, std::vector<JoinKey> keys, const StatsMap& stats) {
  Candidate c;
  c.plan = make_join(l.plan, r.plan, std::move(keys));
  c.cost = plan_cost(*c.plan, stats);
  c.signature = "(" + l.signature + " " + r.signature + ")";
  return c;
}

PlanPtr dynamic_program(const std::vector<PlanPtr>& relations, const JoinGraph& graph, const StatsMap& stats) {
  const std::size_t n = relations.size();
  const Mask full = (Mask{1} << n) - 1;
  std::vector<Candidate> best(full + 1);
  for (std::size_t i = 0; i < n; ++i) best[Mask{1} << i] = make_leaf(relations[i], stats);

  for (Mask set = 1; set <= full; ++set) {
    if (std::popcount(set) < 2 || !graph.connected(set)) continue;
    // Every ordered split into two non-empty connected halves.
    for (Mask left = (set - 1) & set; left != 0; left = (left - 1) & set) {
      const Mask right = set & ~left;
      if (!best[left].plan || !best[right].plan) continue;
      auto keys = graph.keys_between(left, right);
      if (keys.empty()) continue;
      auto cand = combine(best[left], best[right], std::move(keys), stats);
      if (cand.better_than(best[set])) best[set] = std::move(cand);
    }
  }
  return best[full].plan;
}

PlanPtr greedy(const std::vector<PlanPtr>& relations, const JoinGraph& graph, const StatsMap& stats) {
  const std::size_t n = relations.size();
  std::vector<Candidate> leaves;
  for (const auto& r : relations) leaves.push_back(make_leaf(r, stats));

  auto better = [](double card, const std::string& sig, double best_card, const std::string& best_sig) {
    return card < best_card || (card == best_card && sig < best_sig);
  };

  Candidate current;
  Mask used = 0;
  double best_card = std::numeric_limits<double>::infinity();
  std::string best_sig;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      auto keys = graph.keys_between(Mask{1} << i, Mask{1} << j);
      if (keys.empty()) continue;
      auto cand = combine(leaves[i], leaves[j], std::move(keys), stats);
      const double card = estimate_cardinality(*cand.plan, stats);
      if (!current.plan || better(card, cand.signature, best_card, best_sig)) {
        best_card = card;
        best_sig = cand.signature;
        current = std::move(cand);
        used = (Mask{1} << i) | (Mask{1} << j);
      }
    }
  }
  if (!current.plan) return nullptr;

  while (std::popcount(used) < static_cast<int>(n)) {
    std::optional<Candidate> next;
    std::size_t next_index = 0;
    double next_card = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (used & (Mask{1} << j)) continue;
      auto keys = graph.keys_between(used, Mask{1} << j);
      if (keys.empty()) continue;
      auto cand = combine(current, leaves[j], std::move(keys), stats);
      const double card = estimate_cardinality(*cand.plan, stats);
      if (!next || better(card, leaves[j].signature, next_card, leaves[next_index].signature)) {
        next = std::move(cand);
        next_index = j;
        next_card = card;
      }
    }
    if (!next) return nullptr;
    current = std::move(*next);
    used |= Mask{1} << next_index;
  }
  return current.plan;
}

}  // namespace

PlanPtr choose_join_order(const std::vector<PlanPtr>& relations, const std::vector<JoinKey>& edges,
                          const StatsMap& stats) {
  if (relations.empty()) throw Error(ErrorCode::InvalidArgument, "join ordering needs at least one relation");
  if (relations.size() > 31) throw Error(ErrorCode::Unsupported, "at most 31 relations can be joined");
  const JoinGraph graph(relations, edges);
  if (relations.size() == 1) return relations.front();
  const Mask full = (Mask{1} << relations.size()) - 1;
  if (!graph.connected(full)) {
    throw Error(ErrorCode::Plan, "join graph is disconnected; cross products are not supported");
  }
  PlanPtr plan = relations.size() <= kMaxDpRelations ? dynamic_program(relations, graph, stats)
                                                     : greedy(relations, graph, stats);
  if (!plan) throw Error(ErrorCode::Internal, "join ordering produced no plan");
  return plan;
}

}  // namespace hmdap::opt
