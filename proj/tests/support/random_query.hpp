#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hmdap/catalog.hpp"
#include "hmdap/optimizer.hpp"

namespace hmdap::testing {

/// Tables t0..t{n-1} with columns (id Int64, k Int64, g Utf8, x Float64,
/// flag Bool). k, g and x contain Nulls. x values are multiples of 0.25 with
/// small magnitude, so sums are exact in any order.
struct RandomDatabase {
  MemoryTables tables;
  opt::StatsMap stats;
  std::vector<std::string> names;
};

RandomDatabase random_database(std::mt19937_64& rng, std::size_t table_count = 4, std::size_t max_rows = 100);

struct QueryShape {
  std::size_t max_joins = 3;
  bool allow_grouping = true;
  bool allow_order = true;
  bool allow_limit = true;
};

/// A valid SELECT over `db`: up to max_joins equi-joins, optional WHERE,
/// GROUP BY (plain, ROLLUP or CUBE), ORDER BY and LIMIT. LIMIT only appears
/// with ORDER BY so the result is fully determined.
std::string random_query(std::mt19937_64& rng, const RandomDatabase& db, const QueryShape& shape = {});

/// Uniform integer in [lo, hi].
std::int64_t uniform(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi);
bool chance(std::mt19937_64& rng, double p);

}  // namespace hmdap::testing
