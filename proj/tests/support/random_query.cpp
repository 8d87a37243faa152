#include "random_query.hpp"

#include <algorithm>

namespace hmdap::testing {

std::int64_t uniform(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

bool chance(std::mt19937_64& rng, double p) { return std::bernoulli_distribution(p)(rng); }

namespace {

const char* const kLetters[] = {"a", "b", "c", "d", "e"};

template <class T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& items) {
  return items[static_cast<std::size_t>(uniform(rng, 0, static_cast<std::int64_t>(items.size()) - 1))];
}

std::string quarter_literal(std::mt19937_64& rng) {
  const double v = static_cast<double>(uniform(rng, -200, 200)) * 0.25;
  return format_double(v);
}

struct QueryBuilder {
  std::mt19937_64& rng;
  std::vector<std::string> tables;

  std::string column(const std::string& name) const { return pick(rng, tables) + "." + name; }

  std::string compare_op() const {
    static const std::vector<std::string> ops = {"=", "<>", "<", "<=", ">", ">="};
    return pick(rng, ops);
  }

  std::string atom() const {
    switch (uniform(rng, 0, 6)) {
      case 0: return column("k") + " " + compare_op() + " " + std::to_string(uniform(rng, -2, 22));
      case 1: return column("x") + " " + compare_op() + " " + quarter_literal(rng);
      case 2: return column("g") + " " + compare_op() + " '" + kLetters[uniform(rng, 0, 4)] + "'";
      case 3: return chance(rng, 0.5) ? column("flag") : column("flag") + " = TRUE";
      case 4: return column("x") + " + " + column("k") + " " + compare_op() + " " + quarter_literal(rng);
      case 5: return column("k") + " " + compare_op() + " " + column("id") + " - " + std::to_string(uniform(rng, 0, 90));
      default: return column("x") + " * 2 " + compare_op() + " " + column("x") + " - " + quarter_literal(rng);
    }
  }

  std::string predicate(int depth) const {
    if (depth == 0 || chance(rng, 0.5)) return atom();
    switch (uniform(rng, 0, 2)) {
      case 0: return "(" + predicate(depth - 1) + " AND " + predicate(depth - 1) + ")";
      case 1: return "(" + predicate(depth - 1) + " OR " + predicate(depth - 1) + ")";
      default: return "NOT (" + predicate(depth - 1) + ")";
    }
  }

  std::string scalar_item() const {
    switch (uniform(rng, 0, 7)) {
      case 0: return column("id");
      case 1: return column("k");
      case 2: return column("g");
      case 3: return column("x");
      case 4: return column("flag");
      case 5: return column("x") + " + " + column("id");
      case 6: return column("k") + " * 3 - 1";
      default: return column("x") + " * " + column("x");
    }
  }

  std::string aggregate_item() const {
    switch (uniform(rng, 0, 10)) {
      case 0: return "COUNT(*)";
      case 1: return "COUNT(" + column("g") + ")";
      case 2: return "SUM(" + column("x") + ")";
      case 3: return "AVG(" + column("x") + ")";
      case 4: return "SUM(" + column("k") + ")";
      case 5: return "MIN(" + column("g") + ")";
      case 6: return "MAX(" + column("x") + ")";
      case 7: return "MIN(" + column("id") + ")";
      case 8: return "AVG(" + column("k") + ")";
      case 9: return "SUM(" + column("x") + " * 2 + " + column("k") + ")";
      default: return "MAX(" + column("flag") + ")";
    }
  }
};

}  // namespace

RandomDatabase random_database(std::mt19937_64& rng, std::size_t table_count, std::size_t max_rows) {
  RandomDatabase db;
  const Schema schema{{"id", ColumnType::Int64},
                      {"k", ColumnType::Int64},
                      {"g", ColumnType::Utf8},
                      {"x", ColumnType::Float64},
                      {"flag", ColumnType::Bool}};
  for (std::size_t t = 0; t < table_count; ++t) {
    const auto name = "t" + std::to_string(t);
    // Occasionally empty, usually well populated.
    const auto rows = chance(rng, 0.05) ? 0 : uniform(rng, 1, static_cast<std::int64_t>(max_rows));
    std::vector<Row> data;
    for (std::int64_t i = 0; i < rows; ++i) {
      Row row;
      row.emplace_back(i + 1);
      row.push_back(chance(rng, 0.1) ? Value::null() : Value(uniform(rng, 0, 19)));
      row.push_back(chance(rng, 0.1) ? Value::null() : Value(std::string(kLetters[uniform(rng, 0, 4)])));
      row.push_back(chance(rng, 0.1) ? Value::null() : Value(static_cast<double>(uniform(rng, -200, 200)) * 0.25));
      row.emplace_back(chance(rng, 0.5));
      data.push_back(std::move(row));
    }
    Relation r(schema, std::move(data));
    db.stats[name] = opt::collect_stats(r);
    db.tables.add(name, std::move(r));
    db.names.push_back(name);
  }
  return db;
}

std::string random_query(std::mt19937_64& rng, const RandomDatabase& db, const QueryShape& shape) {
  std::vector<std::string> pool = db.names;
  std::shuffle(pool.begin(), pool.end(), rng);
  const auto joins = std::min<std::int64_t>(uniform(rng, 0, static_cast<std::int64_t>(shape.max_joins)),
                                            static_cast<std::int64_t>(pool.size()) - 1);
  QueryBuilder b{rng, {pool[0]}};
  std::string from = " FROM " + pool[0];
  for (std::int64_t j = 1; j <= joins; ++j) {
    const auto& t = pool[static_cast<std::size_t>(j)];
    const auto& other = pick(rng, b.tables);
    from += " JOIN " + t + " ON " + other + ".k = " + t + ".k";
    if (chance(rng, 0.2)) from += " AND " + other + ".g = " + t + ".g";
    b.tables.push_back(t);
  }

  std::string where;
  if (chance(rng, 0.6)) where = " WHERE " + b.predicate(2);

  std::vector<std::string> items;
  std::vector<std::string> aliases;
  std::string group;
  const bool grouped = shape.allow_grouping && chance(rng, 0.5);
  if (grouped) {
    std::vector<std::string> candidates;
    for (const auto& t : b.tables) {
      for (const char* c : {"k", "g", "flag"}) candidates.push_back(t + "." + c);
    }
    std::shuffle(candidates.begin(), candidates.end(), rng);
    const auto d = uniform(rng, 0, 3);
    std::vector<std::string> cols(candidates.begin(), candidates.begin() + d);
    for (const auto& c : cols) items.push_back(c);
    const auto aggs = uniform(rng, 1, 3);
    for (std::int64_t i = 0; i < aggs; ++i) items.push_back(b.aggregate_item());
    if (!cols.empty()) {
      group = " GROUP BY ";
      for (std::size_t i = 0; i < cols.size(); ++i) group += (i ? ", " : "") + cols[i];
      const auto mode = uniform(rng, 0, 2);
      if (mode == 1) group += " WITH ROLLUP";
      if (mode == 2) group += " WITH CUBE";
    }
  } else {
    const auto n = uniform(rng, 1, 4);
    for (std::int64_t i = 0; i < n; ++i) items.push_back(b.scalar_item());
  }

  std::string select = "SELECT ";
  for (std::size_t i = 0; i < items.size(); ++i) {
    aliases.push_back("c" + std::to_string(i));
    select += (i ? ", " : "") + items[i] + " AS " + aliases.back();
  }
  if (group.find(" WITH ") != std::string::npos) aliases.push_back("grouping_id");

  std::string order;
  if (shape.allow_order && chance(rng, 0.5)) {
    std::shuffle(aliases.begin(), aliases.end(), rng);
    const auto n = uniform(rng, 1, static_cast<std::int64_t>(aliases.size()));
    order = " ORDER BY ";
    for (std::int64_t i = 0; i < n; ++i) {
      order += (i ? ", " : "") + aliases[static_cast<std::size_t>(i)] + (chance(rng, 0.4) ? " DESC" : "");
    }
    if (shape.allow_limit && chance(rng, 0.4)) order += " LIMIT " + std::to_string(uniform(rng, 0, 20));
  }
  return select + from + where + group + order;
}

}  // namespace hmdap::testing
