#include <algorithm>

#include "hmdap/error.hpp"
#include "hmdap/ml.hpp"

namespace hmdap::ml {

namespace {

std::int64_t int_param(const std::string& text) { return *parse_int64(text); }
double float_param(const std::string& text) { return *parse_float64(text); }

class KMeansEstimator : public Estimator {
 public:
  explicit KMeansEstimator(const std::vector<std::string>& p) {
    const auto k = int_param(p[0]);
    if (k < 1) throw Error(ErrorCode::Config, "KMeans parameter k must be at least 1");
    params_.k = static_cast<std::size_t>(k);
    params_.max_iter = int_param(p[1]);
    if (params_.max_iter < 1) throw Error(ErrorCode::Config, "KMeans parameter max_iter must be at least 1");
    params_.tol = float_param(p[2]);
    if (params_.tol < 0) throw Error(ErrorCode::Config, "KMeans parameter tol must be non-negative");
    params_.seed = static_cast<std::uint64_t>(int_param(p[3]));
  }

  FitResult fit_predict(const FeatureMatrix& m) const override {
    const auto model = kmeans_train(m, params_);
    nlohmann::json summary = {
        {"algorithm", "KMeans"},
        {"parameters",
         {{"k", params_.k}, {"max_iter", params_.max_iter}, {"tol", params_.tol}, {"seed", params_.seed}}},
        {"features", m.feature_names},
        {"model", to_json(model)}};
    return {kmeans_predict(model, m), std::move(summary)};
  }

 private:
  KMeansParams params_;
};

class LogRegEstimator : public Estimator {
 public:
  explicit LogRegEstimator(const std::vector<std::string>& p) {
    lr_ = float_param(p[0]);
    if (!(lr_ > 0)) throw Error(ErrorCode::Config, "LogisticRegression parameter lr must be positive");
    epochs_ = int_param(p[1]);
    if (epochs_ < 0) throw Error(ErrorCode::Config, "LogisticRegression parameter epochs must be non-negative");
    seed_ = static_cast<std::uint64_t>(int_param(p[2]));
  }

  bool needs_label() const override { return true; }

  FitResult fit_predict(const FeatureMatrix& m) const override {
    const auto model = logreg_train(m, m.labels, lr_, epochs_, seed_);
    nlohmann::json summary = {{"algorithm", "LogisticRegression"},
                              {"parameters", {{"lr", lr_}, {"epochs", epochs_}, {"seed", seed_}}},
                              {"features", m.feature_names},
                              {"model", to_json(model)}};
    return {logreg_predict(model, m), std::move(summary)};
  }

 private:
  double lr_ = 0.1;
  std::int64_t epochs_ = 100;
  std::uint64_t seed_ = 0;
};

}  // namespace

EstimatorRegistry EstimatorRegistry::with_builtins() {
  EstimatorRegistry r;
  r.add("KMeans", {{{"k", ParamKind::Int, std::nullopt},
                    {"max_iter", ParamKind::Int, "100"},
                    {"tol", ParamKind::Float, "0.0001"},
                    {"seed", ParamKind::Int, "0"}},
                   false,
                   [](const std::vector<std::string>& p) { return std::make_unique<KMeansEstimator>(p); }});
  EstimatorInfo logreg{{{"lr", ParamKind::Float, "0.1"}, {"epochs", ParamKind::Int, "100"}, {"seed", ParamKind::Int, "0"}},
                       true,
                       [](const std::vector<std::string>& p) { return std::make_unique<LogRegEstimator>(p); }};
  r.add("LogisticRegression", logreg);
  r.add("LogReg", logreg);
  return r;
}

void EstimatorRegistry::add(const std::string& name, EstimatorInfo info) {
  if (name.empty()) throw Error(ErrorCode::InvalidArgument, "estimator name must not be empty");
  if (!entries_.emplace(name, std::move(info)).second) {
    throw Error(ErrorCode::Conflict, "estimator '" + name + "' is already registered");
  }
}

const EstimatorInfo& EstimatorRegistry::info(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    std::string known;
    for (const auto& n : names()) known += (known.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::NotFound, "unknown algorithm '" + name + "' (known: " + known + ")");
  }
  return it->second;
}

std::vector<std::string> EstimatorRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [n, _] : entries_) out.push_back(n);
  return out;
}

std::vector<std::string> EstimatorRegistry::complete_params(const std::string& name,
                                                            const std::vector<std::string>& params) const {
  const auto& specs = info(name).params;
  if (params.size() > specs.size()) {
    throw Error(ErrorCode::Config, name + " takes at most " + std::to_string(specs.size()) + " parameters, got " +
                                       std::to_string(params.size()));
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& spec = specs[i];
    std::string value;
    if (i < params.size()) {
      value = params[i];
    } else if (spec.default_value) {
      value = *spec.default_value;
    } else {
      throw Error(ErrorCode::Config, name + " parameter " + std::to_string(i + 1) + " (" + spec.name + ") is required");
    }
    const bool ok = spec.kind == ParamKind::Int ? parse_int64(value).has_value() : parse_float64(value).has_value();
    if (!ok) {
      throw Error(ErrorCode::Config, name + " parameter " + spec.name + " expects " +
                                         (spec.kind == ParamKind::Int ? "an integer" : "a number") + ", got '" +
                                         value + "'");
    }
    out.push_back(std::move(value));
  }
  return out;
}

std::unique_ptr<Estimator> EstimatorRegistry::create(const std::string& name,
                                                     const std::vector<std::string>& params) const {
  return info(name).factory(complete_params(name, params));
}

}  // namespace hmdap::ml
