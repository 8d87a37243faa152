#include <algorithm>
#include <fstream>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "hmdap/catalog.hpp"
#include "hmdap/error.hpp"
#include "hmdap/optimizer.hpp"

namespace hmdap::opt {

Relation sample_relation(const Relation& r, std::size_t target_size, std::uint64_t seed) {
  if (target_size == 0) throw Error(ErrorCode::InvalidArgument, "sample size must be at least 1");
  std::vector<Row> reservoir;
  reservoir.reserve(std::min(target_size, r.row_count()));
  std::mt19937_64 rng(seed);
  std::size_t seen = 0;
  for (const auto& part : r.partitions()) {
    for (const auto& row : part) {
      if (seen < target_size) {
        reservoir.push_back(row);
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, seen);
        const std::size_t j = pick(rng);
        if (j < target_size) reservoir[j] = row;
      }
      ++seen;
    }
  }
  return Relation(r.schema(), std::move(reservoir));
}

double chao84(double distinct, double singletons, double doubletons) {
  if (doubletons > 0) return distinct + singletons * singletons / (2.0 * doubletons);
  return distinct + singletons * (singletons - 1.0) / 2.0;
}

struct StatsAccumulator::Column {
  Value min;
  Value max;
  std::int64_t nulls = 0;
  std::unordered_set<Value, ValueHash> distinct;
};

StatsAccumulator::StatsAccumulator(const Schema& schema, bool track_distinct)
    : schema_(schema), track_distinct_(track_distinct) {
  for (std::size_t i = 0; i < schema.size(); ++i) columns_.push_back(std::make_shared<Column>());
}

StatsAccumulator::StatsAccumulator(const StatsAccumulator& other)
    : schema_(other.schema_), track_distinct_(other.track_distinct_), rows_(other.rows_) {
  for (const auto& c : other.columns_) columns_.push_back(std::make_shared<Column>(*c));
}

StatsAccumulator& StatsAccumulator::operator=(const StatsAccumulator& other) {
  if (this != &other) *this = StatsAccumulator(other);
  return *this;
}

StatsAccumulator::~StatsAccumulator() = default;

void StatsAccumulator::add(const Row& row) {
  ++rows_;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    auto& c = *columns_[i];
    const Value& v = row[i];
    if (v.is_null()) {
      ++c.nulls;
      continue;
    }
    if (c.min.is_null() || total_order(v, c.min) < 0) c.min = v;
    if (c.max.is_null() || total_order(v, c.max) > 0) c.max = v;
    if (track_distinct_) c.distinct.insert(v);
  }
}

void StatsAccumulator::merge(const StatsAccumulator& other) {
  rows_ += other.rows_;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    auto& c = *columns_[i];
    const auto& o = *other.columns_[i];
    c.nulls += o.nulls;
    if (!o.min.is_null() && (c.min.is_null() || total_order(o.min, c.min) < 0)) c.min = o.min;
    if (!o.max.is_null() && (c.max.is_null() || total_order(o.max, c.max) > 0)) c.max = o.max;
    if (track_distinct_) c.distinct.insert(o.distinct.begin(), o.distinct.end());
  }
}

TableStats StatsAccumulator::finish() const {
  TableStats out;
  out.row_count = rows_;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto& c = *columns_[i];
    out.columns[schema_[i].name] =
        ColumnStats{static_cast<double>(c.distinct.size()), c.min, c.max, c.nulls};
  }
  return out;
}

TableStats collect_stats(const Relation& r, std::size_t sample_threshold, std::uint64_t seed) {
  if (sample_threshold == 0) throw Error(ErrorCode::InvalidArgument, "sample threshold must be at least 1");
  const bool exact = r.row_count() <= sample_threshold;
  StatsAccumulator total(r.schema(), exact);
  for (const auto& part : r.partitions()) {
    StatsAccumulator partial(r.schema(), exact);
    for (const auto& row : part) partial.add(row);
    total.merge(partial);
  }
  TableStats stats = total.finish();
  if (exact) return stats;

  const Relation sample = sample_relation(r, sample_threshold, seed);
  for (std::size_t i = 0; i < r.schema().size(); ++i) {
    std::unordered_map<Value, std::int64_t, ValueHash> freq;
    for (const auto& row : sample.partitions().front()) {
      if (!row[i].is_null()) ++freq[row[i]];
    }
    double f1 = 0, f2 = 0;
    for (const auto& [_, n] : freq) {
      f1 += n == 1;
      f2 += n == 2;
    }
    const double d = static_cast<double>(freq.size());
    auto& col = stats.columns[r.schema()[i].name];
    const double non_null = static_cast<double>(stats.row_count - col.null_count);
    col.ndv_estimate = std::clamp(chao84(d, f1, f2), d, std::max(d, non_null));
  }
  return stats;
}

namespace {

nlohmann::json value_to_json(const Value& v) {
  if (v.is_null()) return nullptr;
  if (v.is_bool()) return v.as_bool();
  if (v.is_int()) return v.as_int();
  if (v.is_float()) return v.as_float();
  return v.as_string();
}

Value value_from_json(const nlohmann::json& j) {
  if (j.is_null()) return {};
  if (j.is_boolean()) return Value(j.get<bool>());
  if (j.is_number_integer()) return Value(j.get<std::int64_t>());
  if (j.is_number()) return Value(j.get<double>());
  if (j.is_string()) return Value(j.get<std::string>());
  throw Error(ErrorCode::Config, "unsupported JSON value in statistics: " + j.dump());
}

}  // namespace

nlohmann::json stats_to_json(const StatsMap& stats) {
  auto doc = nlohmann::json::object();
  for (const auto& [table, ts] : stats) {
    auto cols = nlohmann::json::object();
    for (const auto& [name, c] : ts.columns) {
      cols[name] = {{"ndv_estimate", c.ndv_estimate},
                    {"min", value_to_json(c.min)},
                    {"max", value_to_json(c.max)},
                    {"null_count", c.null_count}};
    }
    doc[table] = {{"row_count", ts.row_count}, {"columns", cols}};
  }
  return doc;
}

StatsMap stats_from_json(const nlohmann::json& doc) {
  StatsMap out;
  try {
    for (const auto& [table, t] : doc.items()) {
      TableStats ts;
      ts.row_count = t.at("row_count").get<std::int64_t>();
      for (const auto& [name, c] : t.at("columns").items()) {
        ts.columns[name] = ColumnStats{c.at("ndv_estimate").get<double>(), value_from_json(c.at("min")),
                                       value_from_json(c.at("max")), c.at("null_count").get<std::int64_t>()};
      }
      out.emplace(table, std::move(ts));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("malformed statistics document: ") + e.what());
  }
  return out;
}

void save_stats(const std::filesystem::path& path, const StatsMap& stats) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << stats_to_json(stats).dump(2) << "\n";
}

StatsMap load_stats(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  try {
    return stats_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, "malformed statistics file '" + path.string() + "': " + e.what());
  }
}

}  // namespace hmdap::opt
