#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hmdap/relation.hpp"

namespace hmdap::ml {

/// Dense row-major n x d matrix plus the rows it was built from.
struct FeatureMatrix {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> values;
  std::vector<std::string> feature_names;
  /// Originating rows in matrix order (one partition).
  Relation source{Schema{}};
  /// 0/1 labels when a label column was requested, otherwise empty.
  std::vector<double> labels;

  double at(std::size_t i, std::size_t j) const { return values[i * d + j]; }
  const double* row(std::size_t i) const { return values.data() + i * d; }
};

/// Int64 features widen to Float64. Label columns must be Bool or Int64 in
/// {0, 1}. Rows with a Null in any selected column are rejected.
FeatureMatrix relation_to_matrix(const Relation& r, const std::vector<std::string>& feature_cols,
                                 const std::optional<std::string>& label_col = std::nullopt);

/// Builds a matrix from raw values; `source` gets columns x0..x{d-1}.
FeatureMatrix matrix_from_values(std::size_t n, std::size_t d, std::vector<double> values);

// ---- k-means -------------------------------------------------------------

struct KMeansParams {
  std::size_t k = 0;
  std::int64_t max_iter = 100;
  double tol = 1e-4;
  std::uint64_t seed = 0;
};

struct KMeansModel {
  std::size_t k = 0;
  std::size_t d = 0;
  /// k x d row-major.
  std::vector<double> centroids;
  double inertia = 0.0;
  /// Number of centroid update steps performed.
  std::int64_t iterations_run = 0;
  /// Inertia of the initial assignment, then after every update step.
  std::vector<double> inertia_trace;
  /// Final training assignment per row.
  std::vector<std::size_t> assignments;
  /// Update steps that re-seeded an empty cluster.
  std::vector<std::int64_t> reseeded_iterations;
};

/// k-means++ seeding: k x d initial centroids drawn from the rows.
std::vector<double> kmeans_plus_plus(const FeatureMatrix& m, std::size_t k, std::uint64_t seed);

KMeansModel kmeans_train(const FeatureMatrix& m, const KMeansParams& params);
/// Lloyd iterations from explicit starting centroids (k x d).
KMeansModel kmeans_train_from(const FeatureMatrix& m, std::vector<double> initial_centroids, std::size_t k,
                              std::int64_t max_iter, double tol);

/// Index of the closest centroid by squared distance; lowest index on ties.
std::size_t nearest_centroid(const KMeansModel& model, const double* point);
/// Source rows plus Int64 `cluster` (`cluster_ml` if the name is taken).
Relation kmeans_predict(const KMeansModel& model, const FeatureMatrix& m);
double squared_distance(const double* a, const double* b, std::size_t d);

// ---- logistic regression -------------------------------------------------

inline constexpr double kLogitClamp = 30.0;

struct LogRegModel {
  std::vector<double> weights;
  double bias = 0.0;
  double training_loss = 0.0;
  /// Loss before the first epoch and after every epoch.
  std::vector<double> loss_trace;
};

struct LossGrad {
  double loss = 0.0;
  /// d weight partials followed by the bias partial.
  std::vector<double> grad;
};

double sigmoid(double z);

/// Mean binary cross-entropy with logits clamped to +-30, and its gradient.
LossGrad logreg_loss_grad(const std::vector<double>& weights, double bias, const FeatureMatrix& m,
                          const std::vector<double>& labels);

/// Full-batch gradient descent from zero. `seed` is accepted for interface
/// symmetry; training draws no random numbers.
LogRegModel logreg_train(const FeatureMatrix& m, const std::vector<double>& labels, double lr,
                         std::int64_t epochs, std::uint64_t seed = 0);

/// Source rows plus Float64 `probability` and Int64 `label` (1 iff p >= 0.5).
/// A name already present in the source gets `_ml` appended.
Relation logreg_predict(const LogRegModel& model, const FeatureMatrix& m);

// ---- estimator registry ----------------------------------------------------

enum class ParamKind { Int, Float };

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::Float;
  /// Nullopt marks a required parameter.
  std::optional<std::string> default_value;
};

/// Result of fitting an estimator and scoring its training data.
struct FitResult {
  Relation predictions{Schema{}};
  nlohmann::json model_summary;
};

class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual FitResult fit_predict(const FeatureMatrix& m) const = 0;
  virtual bool needs_label() const { return false; }
};

using EstimatorFactory = std::function<std::unique_ptr<Estimator>(const std::vector<std::string>& params)>;

struct EstimatorInfo {
  std::vector<ParamSpec> params;
  bool needs_label = false;
  EstimatorFactory factory;
};

class EstimatorRegistry {
 public:
  /// Registry with KMeans and LogisticRegression.
  static EstimatorRegistry with_builtins();

  void add(const std::string& name, EstimatorInfo info);
  bool contains(const std::string& name) const { return entries_.count(name) > 0; }
  const EstimatorInfo& info(const std::string& name) const;
  std::vector<std::string> names() const;

  /// Pads `params` with defaults, validating arity and numeric syntax.
  std::vector<std::string> complete_params(const std::string& name, const std::vector<std::string>& params) const;
  std::unique_ptr<Estimator> create(const std::string& name, const std::vector<std::string>& params) const;

 private:
  std::map<std::string, EstimatorInfo> entries_;
};

nlohmann::json to_json(const KMeansModel& model);
nlohmann::json to_json(const LogRegModel& model);

}  // namespace hmdap::ml
