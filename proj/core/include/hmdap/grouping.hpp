#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hmdap {

enum class GroupMode { Plain, Rollup, Cube };

std::string_view to_string(GroupMode mode);

inline constexpr std::size_t kMaxCubeColumns = 16;
inline constexpr std::string_view kGroupingIdColumn = "grouping_id";

struct GroupingSet {
  /// Positions into the GROUP BY column list, ascending.
  std::vector<std::size_t> columns;
  /// Bit i set iff group column i is aggregated away in this set.
  std::uint64_t grouping_id = 0;

  friend bool operator==(const GroupingSet&, const GroupingSet&) = default;
};

/// Plain -> the full set; Rollup(c1..cd) -> the d+1 prefixes; Cube -> all
/// 2^d subsets. Ordered by decreasing size, then lexicographically by column
/// position. Throws InvalidArgument on duplicate columns.
std::vector<GroupingSet> grouping_sets(const std::vector<std::string>& group_cols, GroupMode mode);

/// Same sets rendered as column-name lists.
std::vector<std::vector<std::string>> grouping_set_names(const std::vector<std::string>& group_cols, GroupMode mode);

}  // namespace hmdap
