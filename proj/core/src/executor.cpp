#include "hmdap/executor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "hmdap/error.hpp"
#include "hmdap/exact_sum.hpp"
#include "hmdap/sql.hpp"

namespace hmdap::exec {

namespace {

__extension__ using Int128 = __int128;

PhysicalPtr make(auto op, std::vector<PhysicalPtr> inputs, Schema schema) {
  return std::make_shared<const PhysicalNode>(PhysicalNode{std::move(op), std::move(inputs), std::move(schema)});
}

std::optional<double> try_estimate(const LogicalNode& node, const opt::StatsMap& stats) {
  try {
    return opt::estimate_cardinality(node, stats);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Plan) throw;
    return std::nullopt;
  }
}

std::string_view op_name(const PhysicalNode& n) {
  return std::visit(
      [](const auto& op) -> std::string_view {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, TableScanExec>) return "TableScan";
        else if constexpr (std::is_same_v<T, FilterExec>) return "FilterExec";
        else if constexpr (std::is_same_v<T, ProjectExec>) return "ProjectExec";
        else if constexpr (std::is_same_v<T, HashJoinExec>) return "HashJoinExec";
        else if constexpr (std::is_same_v<T, HashAggregateExec>) return "HashAggregateExec";
        else if constexpr (std::is_same_v<T, SortExec>) return "SortExec";
        else return "LimitExec";
      },
      n.op);
}

// ---- key hashing -------------------------------------------------------

/// Join keys compare with SQL equality (Int64 1 matches Float64 1.0).
struct JoinKeyHash {
  std::size_t operator()(const std::vector<Value>& k) const noexcept {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (const auto& v : k) h = (h ^ sql_hash(v)) * 0x100000001b3ULL;
    return h;
  }
};
struct JoinKeyEqual {
  bool operator()(const std::vector<Value>& a, const std::vector<Value>& b) const {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!sql_equal(a[i], b[i])) return false;
    }
    return true;
  }
};

/// Group keys compare structurally so that NULLs form one group.
struct GroupKeyHash {
  std::size_t operator()(const std::vector<Value>& k) const noexcept {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (const auto& v : k) h = (h ^ v.hash()) * 0x100000001b3ULL;
    return h;
  }
};

bool rows_less(const Row& a, const Row& b) {
  return std::lexicographical_compare_three_way(a.begin(), a.end(), b.begin(), b.end(), total_order) < 0;
}

// ---- aggregation state ---------------------------------------------------

class AggState {
 public:
  AggState(AggFunc func, std::optional<ColumnType> arg_type) : func_(func), arg_type_(arg_type) {}

  void add(const Value& v, bool count_star) {
    if (count_star) {
      ++count_;
      return;
    }
    if (v.is_null()) return;
    ++count_;
    switch (func_) {
      case AggFunc::Count: break;
      case AggFunc::Sum:
      case AggFunc::Avg:
        if (v.is_int() && func_ == AggFunc::Sum) int_sum_ += v.as_int();
        else float_sum_.add(v.as_double());
        break;
      case AggFunc::Min:
        if (extreme_.is_null() || total_order(v, extreme_) < 0) extreme_ = v;
        break;
      case AggFunc::Max:
        if (extreme_.is_null() || total_order(v, extreme_) > 0) extreme_ = v;
        break;
    }
  }

  void merge(const AggState& o) {
    count_ += o.count_;
    int_sum_ += o.int_sum_;
    float_sum_.merge(o.float_sum_);
    if (!o.extreme_.is_null()) {
      if (extreme_.is_null() || (func_ == AggFunc::Min ? total_order(o.extreme_, extreme_) < 0
                                                        : total_order(o.extreme_, extreme_) > 0)) {
        extreme_ = o.extreme_;
      }
    }
  }

  Value finish() const {
    switch (func_) {
      case AggFunc::Count: return Value(count_);
      case AggFunc::Sum:
        if (count_ == 0) return {};
        if (arg_type_ == ColumnType::Int64) {
          if (int_sum_ > std::numeric_limits<std::int64_t>::max() ||
              int_sum_ < std::numeric_limits<std::int64_t>::min()) {
            throw Error(ErrorCode::Runtime, "integer overflow in SUM");
          }
          return Value(static_cast<std::int64_t>(int_sum_));
        }
        return finite(float_sum_.result(), "SUM");
      case AggFunc::Avg:
        if (count_ == 0) return {};
        return finite(float_sum_.result() / static_cast<double>(count_), "AVG");
      case AggFunc::Min:
      case AggFunc::Max: return extreme_;
    }
    return {};
  }

 private:
  static Value finite(double v, std::string_view what) {
    if (!std::isfinite(v)) throw Error(ErrorCode::Runtime, "floating-point overflow in " + std::string(what));
    return Value(v);
  }

  AggFunc func_;
  std::optional<ColumnType> arg_type_;
  std::int64_t count_ = 0;
  Int128 int_sum_ = 0;
  ExactSum float_sum_;
  Value extreme_;
};

struct AggSpec {
  AggFunc func;
  std::optional<BoundExpression> arg;
  std::optional<ColumnType> arg_type;
};

using GroupTable = std::unordered_map<std::vector<Value>, std::vector<AggState>, GroupKeyHash>;

// ---- evaluation ------------------------------------------------------------

class Evaluator {
 public:
  explicit Evaluator(WorkerPool& pool) : pool_(pool) {}

  Relation run(const PhysicalNode& node) {
    std::vector<Relation> inputs;
    for (const auto& in : node.inputs) inputs.push_back(run(*in));
    try {
      return std::visit([&](const auto& op) { return eval(node, op, inputs); }, node.op);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(op_name(node)) + ": " + e.what(), e.position());
    }
  }

 private:
  template <class F>
  std::vector<Partition> map_partitions(const Relation& in, F&& f) {
    std::vector<Partition> out(in.partition_count());
    pool_.parallel_for(out.size(), [&](std::size_t i) { out[i] = f(in.partitions()[i]); });
    return out;
  }

  Relation eval(const PhysicalNode& node, const TableScanExec& op, std::vector<Relation>&) {
    const auto& data = *op.data;
    if (data.schema().size() != node.schema.size()) {
      throw Error(ErrorCode::Scan, "table '" + op.table + "' no longer matches its planned schema");
    }
    for (std::size_t i = 0; i < node.schema.size(); ++i) {
      if (data.schema()[i].type != node.schema[i].type) {
        throw Error(ErrorCode::Scan, "table '" + op.table + "' no longer matches its planned schema");
      }
    }
    auto parts = repartition(data, pool_.size());
    return Relation(node.schema, parts.partitions());
  }

  Relation eval(const PhysicalNode& node, const FilterExec& op, std::vector<Relation>& in) {
    const auto pred = bind(*op.predicate, in[0].schema());
    return Relation(node.schema, map_partitions(in[0], [&](const Partition& p) {
                      Partition out;
                      for (const auto& row : p) {
                        const Value v = pred.eval(row);
                        if (v.is_bool() && v.as_bool()) out.push_back(row);
                      }
                      return out;
                    }));
  }

  Relation eval(const PhysicalNode& node, const ProjectExec& op, std::vector<Relation>& in) {
    std::vector<BoundExpression> exprs;
    for (const auto& e : op.exprs) exprs.push_back(bind(*e, in[0].schema()));
    return Relation(node.schema, map_partitions(in[0], [&](const Partition& p) {
                      Partition out;
                      out.reserve(p.size());
                      for (const auto& row : p) {
                        Row r;
                        r.reserve(exprs.size());
                        for (const auto& e : exprs) r.push_back(e.eval(row));
                        out.push_back(std::move(r));
                      }
                      return out;
                    }));
  }

  Relation eval(const PhysicalNode& node, const HashJoinExec& op, std::vector<Relation>& in) {
    const bool build_left = op.build == BuildSide::Left;
    const Relation& build = build_left ? in[0] : in[1];
    const Relation& probe = build_left ? in[1] : in[0];
    std::vector<std::size_t> build_cols, probe_cols;
    for (const auto& k : op.keys) {
      build_cols.push_back(build.schema().index_of(build_left ? k.left : k.right));
      probe_cols.push_back(probe.schema().index_of(build_left ? k.right : k.left));
    }
    auto key_of = [](const Row& row, const std::vector<std::size_t>& cols) -> std::optional<std::vector<Value>> {
      std::vector<Value> key;
      key.reserve(cols.size());
      for (auto c : cols) {
        if (row[c].is_null()) return std::nullopt;
        key.push_back(row[c]);
      }
      return key;
    };

    // Build phase completes before any probe starts.
    std::unordered_map<std::vector<Value>, std::vector<const Row*>, JoinKeyHash, JoinKeyEqual> table;
    for (const auto& part : build.partitions()) {
      for (const auto& row : part) {
        if (auto key = key_of(row, build_cols)) table[std::move(*key)].push_back(&row);
      }
    }

    return Relation(node.schema, map_partitions(probe, [&](const Partition& p) {
                      Partition out;
                      for (const auto& row : p) {
                        auto key = key_of(row, probe_cols);
                        if (!key) continue;
                        auto it = table.find(*key);
                        if (it == table.end()) continue;
                        for (const Row* match : it->second) {
                          const Row& left = build_left ? *match : row;
                          const Row& right = build_left ? row : *match;
                          Row joined = left;
                          joined.insert(joined.end(), right.begin(), right.end());
                          out.push_back(std::move(joined));
                        }
                      }
                      return out;
                    }));
  }

  Relation eval(const PhysicalNode& node, const HashAggregateExec& op, std::vector<Relation>& in) {
    const Schema& schema = in[0].schema();
    std::vector<std::size_t> group_idx;
    for (const auto& g : op.group_cols) group_idx.push_back(schema.index_of(g));
    std::vector<AggSpec> specs;
    for (const auto& e : op.aggregates) {
      const auto& a = std::get<Aggregate>(e->node);
      AggSpec s{a.func, std::nullopt, std::nullopt};
      if (a.arg) {
        s.arg = bind(*a.arg, schema);
        s.arg_type = infer_type(*a.arg, schema);
      }
      specs.push_back(std::move(s));
    }
    auto fresh_states = [&] {
      std::vector<AggState> st;
      for (const auto& s : specs) st.emplace_back(s.func, s.arg_type);
      return st;
    };
    auto key_for = [&](const Row& row, const GroupingSet& set) {
      std::vector<Value> key(op.group_cols.size());
      for (auto i : set.columns) key[i] = row[group_idx[i]];
      return key;
    };

    // Partial aggregation per partition and grouping set.
    const std::size_t nsets = op.sets.size();
    std::vector<std::vector<GroupTable>> partials(in[0].partition_count(), std::vector<GroupTable>(nsets));
    pool_.parallel_for(partials.size(), [&](std::size_t p) {
      std::vector<Value> args(specs.size());
      for (const auto& row : in[0].partitions()[p]) {
        for (std::size_t a = 0; a < specs.size(); ++a) args[a] = specs[a].arg ? specs[a].arg->eval(row) : Value();
        for (std::size_t s = 0; s < nsets; ++s) {
          auto [it, inserted] = partials[p][s].try_emplace(key_for(row, op.sets[s]));
          if (inserted) it->second = fresh_states();
          for (std::size_t a = 0; a < specs.size(); ++a) it->second[a].add(args[a], !specs[a].arg);
        }
      }
    });

    // Merge: each grouping set is owned by one task.
    std::vector<std::vector<Row>> per_set(nsets);
    pool_.parallel_for(nsets, [&](std::size_t s) {
      GroupTable merged;
      for (auto& part : partials) {
        for (auto& [key, states] : part[s]) {
          auto [it, inserted] = merged.try_emplace(key);
          if (inserted) {
            it->second = std::move(states);
          } else {
            for (std::size_t a = 0; a < states.size(); ++a) it->second[a].merge(states[a]);
          }
        }
      }
      if (op.sets[s].columns.empty() && merged.empty()) merged.emplace(std::vector<Value>(op.group_cols.size()), fresh_states());
      auto& rows = per_set[s];
      for (const auto& [key, states] : merged) {
        Row row = key;
        for (const auto& st : states) row.push_back(st.finish());
        row.emplace_back(static_cast<std::int64_t>(op.sets[s].grouping_id));
        rows.push_back(std::move(row));
      }
      std::sort(rows.begin(), rows.end(), rows_less);
    });

    Partition out;
    for (auto& rows : per_set) {
      for (auto& r : rows) out.push_back(std::move(r));
    }
    return Relation(node.schema, std::move(out));
  }

  Relation eval(const PhysicalNode& node, const SortExec& op, std::vector<Relation>& in) {
    std::vector<std::pair<std::size_t, bool>> keys;
    for (const auto& k : op.keys) keys.emplace_back(in[0].schema().index_of(k.column), k.descending);
    auto less = [&](const Row& a, const Row& b) {
      for (const auto& [idx, desc] : keys) {
        const auto c = total_order(a[idx], b[idx]);
        if (c != 0) return desc ? c > 0 : c < 0;
      }
      return rows_less(a, b);
    };
    // Sort partitions in parallel, then merge into one ordered partition.
    std::vector<Partition> parts = in[0].partitions();
    pool_.parallel_for(parts.size(), [&](std::size_t i) { std::sort(parts[i].begin(), parts[i].end(), less); });
    Partition out;
    for (auto& p : parts) {
      const auto mid = out.size();
      out.insert(out.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
      std::inplace_merge(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(mid), out.end(), less);
    }
    return Relation(node.schema, std::move(out));
  }

  Relation eval(const PhysicalNode& node, const LimitExec& op, std::vector<Relation>& in) {
    Partition out;
    const auto n = static_cast<std::size_t>(op.count);
    for (const auto& p : in[0].partitions()) {
      for (const auto& row : p) {
        if (out.size() >= n) break;
        out.push_back(row);
      }
    }
    return Relation(node.schema, std::move(out));
  }

  WorkerPool& pool_;
};

void explain_into(const PhysicalNode& n, int depth, std::ostringstream& out) {
  out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << op_name(n);
  std::visit(
      [&](const auto& op) {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, TableScanExec>) {
          out << " " << op.table;
        } else if constexpr (std::is_same_v<T, FilterExec>) {
          out << " " << to_sql(*op.predicate);
        } else if constexpr (std::is_same_v<T, ProjectExec>) {
          for (std::size_t i = 0; i < op.exprs.size(); ++i) {
            out << (i ? ", " : " ") << to_sql(*op.exprs[i]) << " AS " << n.schema[i].name;
          }
        } else if constexpr (std::is_same_v<T, HashJoinExec>) {
          out << " build=" << (op.build == BuildSide::Left ? "left" : "right");
          for (const auto& k : op.keys) out << " " << k.left << " = " << k.right;
        } else if constexpr (std::is_same_v<T, HashAggregateExec>) {
          out << " sets=" << op.sets.size() << " by [";
          for (std::size_t i = 0; i < op.group_cols.size(); ++i) out << (i ? ", " : "") << op.group_cols[i];
          out << "]";
          for (const auto& a : op.aggregates) out << " " << to_sql(*a);
        } else if constexpr (std::is_same_v<T, SortExec>) {
          for (const auto& k : op.keys) out << " " << k.column << (k.descending ? " DESC" : " ASC");
        } else {
          out << " " << op.count;
        }
      },
      n.op);
  out << "\n";
  for (const auto& in : n.inputs) explain_into(*in, depth + 1, out);
}

}  // namespace

PhysicalPtr compile_physical(const PlanPtr& plan, const opt::StatsMap& stats, const TableProvider& tables) {
  std::vector<PhysicalPtr> inputs;
  for (const auto& in : plan->inputs) inputs.push_back(compile_physical(in, stats, tables));
  return std::visit(
      [&](const auto& op) -> PhysicalPtr {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, ScanOp>) {
          return make(TableScanExec{op.table, tables.table_data(op.table)}, {}, plan->schema);
        } else if constexpr (std::is_same_v<T, FilterOp>) {
          return make(FilterExec{op.predicate}, std::move(inputs), plan->schema);
        } else if constexpr (std::is_same_v<T, ProjectOp>) {
          return make(ProjectExec{op.exprs}, std::move(inputs), plan->schema);
        } else if constexpr (std::is_same_v<T, JoinOp>) {
          auto l = try_estimate(*plan->inputs[0], stats);
          auto r = try_estimate(*plan->inputs[1], stats);
          const auto side = (l && r && *r < *l) ? BuildSide::Right : BuildSide::Left;
          return make(HashJoinExec{op.keys, side}, std::move(inputs), plan->schema);
        } else if constexpr (std::is_same_v<T, AggregateOp>) {
          return make(HashAggregateExec{op.group_cols, op.mode, grouping_sets(op.group_cols, op.mode), op.aggregates},
                      std::move(inputs), plan->schema);
        } else if constexpr (std::is_same_v<T, SortOp>) {
          return make(SortExec{op.keys}, std::move(inputs), plan->schema);
        } else {
          return make(LimitExec{op.count}, std::move(inputs), plan->schema);
        }
      },
      plan->op);
}

Relation execute(const PhysicalNode& plan, WorkerPool& pool) { return Evaluator(pool).run(plan); }

Relation execute(const PhysicalNode& plan, std::size_t workers) {
  WorkerPool pool(workers);
  return execute(plan, pool);
}

std::string explain(const PhysicalNode& plan) {
  std::ostringstream out;
  explain_into(plan, 0, out);
  return out.str();
}

Relation run_query(std::string_view sql_text, const TableProvider& tables, const opt::StatsMap& stats,
                   const QueryOptions& options) {
  PlanPtr plan = sql::plan_sql(sql_text, tables);
  if (options.optimize) plan = opt::optimize(plan, stats);
  return execute(*compile_physical(plan, stats, tables), options.workers);
}

}  // namespace hmdap::exec
