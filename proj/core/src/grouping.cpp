#include "hmdap/grouping.hpp"

#include <algorithm>
#include <set>

#include "hmdap/error.hpp"

namespace hmdap {

std::string_view to_string(GroupMode mode) {
  switch (mode) {
    case GroupMode::Plain: return "Plain";
    case GroupMode::Rollup: return "Rollup";
    case GroupMode::Cube: return "Cube";
  }
  return "Plain";
}

std::vector<GroupingSet> grouping_sets(const std::vector<std::string>& group_cols, GroupMode mode) {
  const std::size_t d = group_cols.size();
  if (std::set<std::string>(group_cols.begin(), group_cols.end()).size() != d) {
    throw Error(ErrorCode::InvalidArgument, "duplicate grouping column");
  }
  const std::uint64_t all = d == 64 ? ~0ULL : ((1ULL << d) - 1);
  auto make = [&](std::uint64_t kept) {
    GroupingSet s;
    for (std::size_t i = 0; i < d; ++i) {
      if (kept & (1ULL << i)) s.columns.push_back(i);
    }
    s.grouping_id = all & ~kept;
    return s;
  };
  std::vector<GroupingSet> sets;
  switch (mode) {
    case GroupMode::Plain: sets.push_back(make(all)); break;
    case GroupMode::Rollup:
      for (std::size_t len = d + 1; len-- > 0;) sets.push_back(make(len == 64 ? all : (1ULL << len) - 1));
      break;
    case GroupMode::Cube:
      if (d > kMaxCubeColumns) {
        throw Error(ErrorCode::InvalidArgument, "CUBE supports at most " + std::to_string(kMaxCubeColumns) +
                                                    " grouping columns");
      }
      for (std::uint64_t kept = 0; kept <= all; ++kept) sets.push_back(make(kept));
      break;
  }
  std::sort(sets.begin(), sets.end(), [](const GroupingSet& a, const GroupingSet& b) {
    if (a.columns.size() != b.columns.size()) return a.columns.size() > b.columns.size();
    return a.columns < b.columns;
  });
  return sets;
}

std::vector<std::vector<std::string>> grouping_set_names(const std::vector<std::string>& group_cols,
                                                         GroupMode mode) {
  std::vector<std::vector<std::string>> out;
  for (const auto& s : grouping_sets(group_cols, mode)) {
    auto& names = out.emplace_back();
    for (auto i : s.columns) names.push_back(group_cols[i]);
  }
  return out;
}

}  // namespace hmdap
