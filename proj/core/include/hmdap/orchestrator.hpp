#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hmdap/catalog.hpp"
#include "hmdap/ml.hpp"
#include "hmdap/optimizer.hpp"

namespace hmdap::pipeline {

enum class Mode { Fallback, Fuse };
std::string_view to_string(Mode mode);

struct DbConfig {
  std::string url;
  std::string user;
  std::string password;

  friend bool operator==(const DbConfig&, const DbConfig&) = default;
};

/// Parsed ML configuration document. Connection fields left empty in the
/// document inherit from the separately supplied DbConfig.
struct PipelineConfig {
  std::string input_sql;
  std::optional<std::string> url;
  std::optional<std::string> user;
  std::optional<std::string> password;
  std::string algorithm;
  std::vector<std::string> parameters;
  Mode mode = Mode::Fallback;
  /// The main relational query; the input query when absent.
  std::optional<std::string> primary_sql;
  std::vector<std::string> feature_cols;
  std::optional<std::string> label_col;
  std::vector<std::string> join_keys;

  const std::string& effective_primary_sql() const { return primary_sql ? *primary_sql : input_sql; }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

struct ParseOptions {
  /// Reject unknown elements; otherwise record them in `warnings`.
  bool strict = true;
  std::vector<std::string>* warnings = nullptr;
  /// When set and the algorithm is registered, parameters are validated and
  /// padded with the algorithm's defaults.
  const ml::EstimatorRegistry* registry = nullptr;
};

PipelineConfig parse_ml_config(std::string_view xml, const ParseOptions& options = {});
std::string serialize(const PipelineConfig& config);
DbConfig parse_db_config(std::string_view xml, const ParseOptions& options = {});
std::string serialize(const DbConfig& config);

/// Inline connection fields override the supplied ones.
DbConfig effective_db(const PipelineConfig& config, const DbConfig& supplied);

/// Source of tables and statistics for a pipeline run. Only the `local:`
/// catalog connector is implemented.
class Connector {
 public:
  virtual ~Connector() = default;
  virtual const TableProvider& tables() const = 0;
  virtual const opt::StatsMap& stats() const = 0;
};

/// `local:<dir>` over a catalog directory.
class LocalConnector : public Connector {
 public:
  explicit LocalConnector(const std::filesystem::path& dir);
  const TableProvider& tables() const override { return *catalog_; }
  const opt::StatsMap& stats() const override { return stats_; }

 private:
  std::unique_ptr<Catalog> catalog_;
  opt::StatsMap stats_;
};

/// Path of a `local:` url, resolved against `base_dir` when relative.
/// Throws Unsupported for other schemes.
std::filesystem::path local_path(const std::string& url, const std::filesystem::path& base_dir);

using ConnectorFactory = std::function<std::shared_ptr<const Connector>(const DbConfig&)>;
/// Factory opening LocalConnectors relative to `base_dir`.
ConnectorFactory local_connector_factory(std::filesystem::path base_dir);

enum class Branch { Relational, ML };
std::string_view to_string(Branch branch);

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct PipelineResult {
  Relation result{Schema{}};
  std::set<Branch> branches_run;
  std::vector<StageTiming> timings;
  std::optional<nlohmann::json> model_summary;
};

struct Engine {
  ConnectorFactory connect;
  ml::EstimatorRegistry registry = ml::EstimatorRegistry::with_builtins();
  std::size_t workers = 1;
  /// Checked at stage boundaries; a set flag aborts with Cancelled.
  const std::atomic<bool>* cancel = nullptr;
  /// Invoked when a stage starts.
  std::function<void(std::string_view stage)> on_stage;
};

PipelineResult execute_pipeline(const PipelineConfig& config, const DbConfig& db, const Engine& engine);

/// Inner equi-join on `keys`: relational columns, then ML columns without
/// the keys. Other shared ML column names get an `_ml` suffix.
Relation join_results(const Relation& relational, const Relation& ml, const std::vector<std::string>& keys);

/// Columns present in both inputs, in the relational input's order.
std::vector<std::string> shared_columns(const Relation& a, const Relation& b);

}  // namespace hmdap::pipeline
