#include "hmdap/orchestrator.hpp"

#include <chrono>

#include "hmdap/error.hpp"
#include "hmdap/executor.hpp"
#include "hmdap/sql.hpp"

namespace hmdap::pipeline {

std::string_view to_string(Branch branch) { return branch == Branch::Relational ? "Relational" : "ML"; }

LocalConnector::LocalConnector(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::NotFound, "catalog directory '" + dir.string() + "' does not exist");
  }
  catalog_ = std::make_unique<Catalog>(dir);
  stats_ = opt::load_stats(dir / opt::kStatsFileName);
}

std::filesystem::path local_path(const std::string& url, const std::filesystem::path& base_dir) {
  constexpr std::string_view prefix = "local:";
  if (url.rfind(prefix, 0) != 0) {
    const auto colon = url.find(':');
    const auto scheme = colon == std::string::npos ? url : url.substr(0, colon);
    throw Error(ErrorCode::Unsupported, "no connector for scheme '" + scheme +
                                            "'; only local: is implemented behind the Connector interface");
  }
  std::filesystem::path p(url.substr(prefix.size()));
  if (p.empty()) p = ".";
  return p.is_absolute() ? p : base_dir / p;
}

ConnectorFactory local_connector_factory(std::filesystem::path base_dir) {
  return [base = std::move(base_dir)](const DbConfig& db) -> std::shared_ptr<const Connector> {
    return std::make_shared<LocalConnector>(local_path(db.url, base));
  };
}

std::vector<std::string> shared_columns(const Relation& a, const Relation& b) {
  std::vector<std::string> out;
  for (const auto& c : a.schema().columns()) {
    if (b.schema().contains(c.name)) out.push_back(c.name);
  }
  return out;
}

Relation join_results(const Relation& relational, const Relation& ml, const std::vector<std::string>& keys) {
  if (keys.empty()) throw Error(ErrorCode::InvalidArgument, "join_results needs at least one key column");
  const Schema& ls = relational.schema();
  const Schema& rs = ml.schema();
  std::vector<std::size_t> lk, rk;
  for (const auto& k : keys) {
    const auto l = ls.find(k);
    const auto r = rs.find(k);
    if (!l) throw Error(ErrorCode::InvalidArgument, "join key '" + k + "' is missing from the relational result");
    if (!r) throw Error(ErrorCode::InvalidArgument, "join key '" + k + "' is missing from the ML result");
    const auto lt = ls[*l].type;
    const auto rt = rs[*r].type;
    if (lt != rt && !(is_numeric(lt) && is_numeric(rt))) {
      throw Error(ErrorCode::Type, "join key '" + k + "' has incompatible types " + std::string(to_string(lt)) +
                                       " and " + std::string(to_string(rt)));
    }
    lk.push_back(*l);
    rk.push_back(*r);
  }
  std::vector<Column> cols = ls.columns();
  std::vector<std::size_t> ml_cols;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    if (std::find(rk.begin(), rk.end(), i) != rk.end()) continue;
    std::string name = rs[i].name;
    while (Schema(cols).contains(name)) name += "_ml";
    cols.push_back({name, rs[i].type});
    ml_cols.push_back(i);
  }
  const auto lrows = relational.rows();
  const auto rrows = ml.rows();
  std::vector<Row> out;
  for (const auto& l : lrows) {
    for (const auto& r : rrows) {
      bool match = true;
      for (std::size_t k = 0; k < lk.size() && match; ++k) {
        match = !l[lk[k]].is_null() && !r[rk[k]].is_null() && sql_equal(l[lk[k]], r[rk[k]]);
      }
      if (!match) continue;
      Row row = l;
      for (auto i : ml_cols) row.push_back(r[i]);
      out.push_back(std::move(row));
    }
  }
  return Relation(Schema(std::move(cols)), std::move(out));
}

namespace {

class StageClock {
 public:
  StageClock(const Engine& engine, std::vector<StageTiming>& timings) : engine_(engine), timings_(timings) {}

  template <class F>
  auto run(const std::string& stage, F&& f) {
    if (engine_.cancel && engine_.cancel->load()) {
      throw Error(ErrorCode::Cancelled, "pipeline cancelled before stage '" + stage + "'");
    }
    if (engine_.on_stage) engine_.on_stage(stage);
    const auto start = std::chrono::steady_clock::now();
    auto result = f();
    const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
    timings_.push_back({stage, elapsed.count()});
    return result;
  }

 private:
  const Engine& engine_;
  std::vector<StageTiming>& timings_;
};

std::vector<std::string> default_features(const Relation& r, const PipelineConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& c : r.schema().columns()) {
    if (!is_numeric(c.type)) continue;
    if (cfg.label_col && c.name == *cfg.label_col) continue;
    if (std::find(cfg.join_keys.begin(), cfg.join_keys.end(), c.name) != cfg.join_keys.end()) continue;
    out.push_back(c.name);
  }
  if (out.empty()) throw Error(ErrorCode::Config, "the input query has no numeric columns to use as features");
  return out;
}

}  // namespace

PipelineResult execute_pipeline(const PipelineConfig& config, const DbConfig& db, const Engine& engine) {
  if (!engine.connect) throw Error(ErrorCode::Internal, "engine has no connector factory");
  PipelineResult out;
  StageClock clock(engine, out.timings);

  // The estimator is resolved up front so a bad algorithm fails before any
  // query runs.
  const auto connector = clock.run("connect", [&] { return engine.connect(effective_db(config, db)); });
  const auto estimator = clock.run("parse", [&] { return engine.registry.create(config.algorithm, config.parameters); });
  const auto& tables = connector->tables();
  const auto& stats = connector->stats();
  auto run_sql = [&](const std::string& text) {
    const PlanPtr plan = opt::optimize(sql::plan_sql(text, tables), stats);
    return exec::execute(*exec::compile_physical(plan, stats, tables), engine.workers);
  };

  Relation relational = clock.run("relational", [&] { return run_sql(config.effective_primary_sql()); });
  out.branches_run.insert(Branch::Relational);

  const bool run_ml = config.mode == Mode::Fuse || relational.empty();
  if (!run_ml) {
    out.result = std::move(relational);
    return out;
  }

  Relation ml_input = clock.run("ml_input", [&] { return run_sql(config.input_sql); });
  ml::FitResult fit = clock.run("ml", [&] {
    const auto features = config.feature_cols.empty() ? default_features(ml_input, config) : config.feature_cols;
    std::optional<std::string> label = config.label_col;
    if (estimator->needs_label() && !label) {
      throw Error(ErrorCode::Config, config.algorithm + " needs a <label> column");
    }
    if (!estimator->needs_label()) label.reset();
    return estimator->fit_predict(ml::relation_to_matrix(ml_input, features, label));
  });
  out.branches_run.insert(Branch::ML);
  out.model_summary = std::move(fit.model_summary);

  if (config.mode == Mode::Fallback) {
    out.result = std::move(fit.predictions);
    return out;
  }
  out.result = clock.run("join", [&] {
    auto keys = config.join_keys.empty() ? shared_columns(relational, fit.predictions) : config.join_keys;
    if (keys.empty()) {
      throw Error(ErrorCode::Config, "fuse mode found no common columns between the relational and ML results");
    }
    return join_results(relational, fit.predictions, keys);
  });
  return out;
}

}  // namespace hmdap::pipeline
