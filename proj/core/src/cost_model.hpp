#pragma once

#include <map>
#include <string>
#include <vector>

#include "hmdap/optimizer.hpp"

namespace hmdap::opt::detail {

/// Estimated output of a node plus the statistics still known for its
/// columns.
struct NodeEstimate {
  double rows = 0.0;
  std::map<std::string, ColumnStats> columns;
};

NodeEstimate estimate_node(const LogicalNode& node, const StatsMap& stats);

/// NDV used by the join formula; falls back to the row count when unknown.
double key_ndv(const NodeEstimate& side, const std::string& column);

/// |R1|...|Rk| / (d1...dm) with both factor lists multiplied in ascending
/// order, so every join tree over the same leaves and edges yields
/// bit-identical estimates.
double join_block_rows(std::vector<double> leaf_rows, std::vector<double> divisors);

}  // namespace hmdap::opt::detail
