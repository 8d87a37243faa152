#include "hmdap/ml.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hmdap/error.hpp"
#include "hmdap/exact_sum.hpp"

namespace hmdap::ml {

namespace {

Relation append_columns(const Relation& source, const std::vector<Column>& extra, const std::vector<Row>& values) {
  std::vector<Column> cols = source.schema().columns();
  // Outputs that collide with a source column get `_ml` appended until unique.
  for (auto c : extra) {
    auto taken = [&](const std::string& n) {
      return std::any_of(cols.begin(), cols.end(), [&](const Column& e) { return e.name == n; });
    };
    while (taken(c.name)) c.name += "_ml";
    cols.push_back(std::move(c));
  }
  std::vector<Row> rows = source.rows();
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].insert(rows[i].end(), values[i].begin(), values[i].end());
  return Relation(Schema(std::move(cols)), std::move(rows));
}

}  // namespace

FeatureMatrix relation_to_matrix(const Relation& r, const std::vector<std::string>& feature_cols,
                                 const std::optional<std::string>& label_col) {
  if (feature_cols.empty()) throw Error(ErrorCode::InvalidArgument, "at least one feature column is required");
  const Schema& schema = r.schema();
  std::vector<std::size_t> idx;
  for (const auto& f : feature_cols) {
    const auto i = schema.find(f);
    if (!i) throw Error(ErrorCode::InvalidArgument, "unknown feature column '" + f + "'");
    if (!is_numeric(schema[*i].type)) {
      throw Error(ErrorCode::Type, "feature column '" + f + "' is " + std::string(to_string(schema[*i].type)) +
                                       "; features must be Int64 or Float64");
    }
    idx.push_back(*i);
  }
  std::optional<std::size_t> label_idx;
  if (label_col) {
    label_idx = schema.find(*label_col);
    if (!label_idx) throw Error(ErrorCode::InvalidArgument, "unknown label column '" + *label_col + "'");
    const auto t = schema[*label_idx].type;
    if (t != ColumnType::Bool && t != ColumnType::Int64) {
      throw Error(ErrorCode::Type, "label column '" + *label_col + "' must be Bool or Int64");
    }
  }
  std::vector<Row> rows = r.rows();
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "cannot build a feature matrix from an empty relation");

  FeatureMatrix m;
  m.n = rows.size();
  m.d = idx.size();
  m.feature_names = feature_cols;
  m.values.reserve(m.n * m.d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const Value& v = rows[i][idx[j]];
      if (v.is_null()) {
        throw Error(ErrorCode::InvalidArgument,
                    "row " + std::to_string(i) + " has a Null in feature column '" + feature_cols[j] + "'");
      }
      m.values.push_back(v.as_double());
    }
    if (label_idx) {
      const Value& v = rows[i][*label_idx];
      if (v.is_null()) {
        throw Error(ErrorCode::InvalidArgument, "row " + std::to_string(i) + " has a Null label");
      }
      const double y = v.is_bool() ? (v.as_bool() ? 1.0 : 0.0) : static_cast<double>(v.as_int());
      if (y != 0.0 && y != 1.0) {
        throw Error(ErrorCode::InvalidArgument, "row " + std::to_string(i) + " has label " + v.to_string() +
                                                    "; labels must be 0 or 1");
      }
      m.labels.push_back(y);
    }
  }
  m.source = Relation(schema, std::move(rows));
  return m;
}

FeatureMatrix matrix_from_values(std::size_t n, std::size_t d, std::vector<double> values) {
  if (d == 0 || values.size() != n * d) throw Error(ErrorCode::InvalidArgument, "matrix shape mismatch");
  FeatureMatrix m;
  m.n = n;
  m.d = d;
  std::vector<Column> cols;
  for (std::size_t j = 0; j < d; ++j) {
    m.feature_names.push_back("x" + std::to_string(j));
    cols.push_back({m.feature_names.back(), ColumnType::Float64});
  }
  std::vector<Row> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) rows[i].emplace_back(values[i * d + j]);
  }
  m.values = std::move(values);
  m.source = Relation(Schema(std::move(cols)), std::move(rows));
  return m;
}

double squared_distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

// ---- k-means -----------------------------------------------------------

std::vector<double> kmeans_plus_plus(const FeatureMatrix& m, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (k > m.n) {
    throw Error(ErrorCode::InvalidArgument,
                "k = " + std::to_string(k) + " exceeds the number of rows (" + std::to_string(m.n) + ")");
  }
  std::mt19937_64 rng(seed);
  auto uniform_index = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  std::vector<double> centroids;
  const std::size_t first = uniform_index(m.n);
  centroids.insert(centroids.end(), m.row(first), m.row(first) + m.d);
  std::vector<double> best(m.n);
  for (std::size_t i = 0; i < m.n; ++i) best[i] = squared_distance(m.row(i), m.row(first), m.d);

  while (centroids.size() < k * m.d) {
    ExactSum total;
    for (double b : best) total.add(b);
    std::size_t pick = 0;
    const double mass = total.result();
    if (mass > 0.0) {
      const double target = std::uniform_real_distribution<double>(0.0, mass)(rng);
      double acc = 0.0;
      pick = m.n;
      for (std::size_t i = 0; i < m.n; ++i) {
        acc += best[i];
        if (best[i] > 0.0 && target < acc) {
          pick = i;
          break;
        }
      }
      if (pick == m.n) {
        // Rounding left target beyond the running sum: take the last candidate.
        for (std::size_t i = m.n; i-- > 0;) {
          if (best[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      pick = uniform_index(m.n);
    }
    centroids.insert(centroids.end(), m.row(pick), m.row(pick) + m.d);
    for (std::size_t i = 0; i < m.n; ++i) best[i] = std::min(best[i], squared_distance(m.row(i), m.row(pick), m.d));
  }
  return centroids;
}

namespace {

struct Assignment {
  std::vector<std::size_t> cluster;
  std::vector<double> dist;
  double inertia = 0.0;
};

Assignment assign_points(const FeatureMatrix& m, const KMeansModel& model) {
  Assignment a;
  a.cluster.resize(m.n);
  a.dist.resize(m.n);
  ExactSum inertia;
  for (std::size_t i = 0; i < m.n; ++i) {
    a.cluster[i] = nearest_centroid(model, m.row(i));
    a.dist[i] = squared_distance(m.row(i), &model.centroids[a.cluster[i] * m.d], m.d);
    inertia.add(a.dist[i]);
  }
  a.inertia = inertia.result();
  return a;
}

}  // namespace

std::size_t nearest_centroid(const KMeansModel& model, const double* point) {
  std::size_t best = 0;
  double best_d = squared_distance(point, model.centroids.data(), model.d);
  for (std::size_t c = 1; c < model.k; ++c) {
    const double dist = squared_distance(point, &model.centroids[c * model.d], model.d);
    if (dist < best_d) {
      best = c;
      best_d = dist;
    }
  }
  return best;
}

KMeansModel kmeans_train_from(const FeatureMatrix& m, std::vector<double> initial_centroids, std::size_t k,
                              std::int64_t max_iter, double tol) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (k > m.n) {
    throw Error(ErrorCode::InvalidArgument,
                "k = " + std::to_string(k) + " exceeds the number of rows (" + std::to_string(m.n) + ")");
  }
  if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be at least 1");
  if (!(tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be non-negative");
  if (initial_centroids.size() != k * m.d) throw Error(ErrorCode::InvalidArgument, "initial centroids shape mismatch");

  KMeansModel model;
  model.k = k;
  model.d = m.d;
  model.centroids = std::move(initial_centroids);
  Assignment current = assign_points(m, model);
  model.inertia_trace.push_back(current.inertia);

  for (std::int64_t iter = 1; iter <= max_iter; ++iter) {
    std::vector<ExactSum> sums(k * m.d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < m.n; ++i) {
      const auto c = current.cluster[i];
      ++counts[c];
      for (std::size_t j = 0; j < m.d; ++j) sums[c * m.d + j].add(m.at(i, j));
    }
    std::vector<double> next(k * m.d);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < m.d; ++j) {
        next[c * m.d + j] = sums[c * m.d + j].result() / static_cast<double>(counts[c]);
      }
    }
    // Empty clusters take the point farthest from its current centroid.
    std::vector<bool> taken(m.n, false);
    bool reseeded = false;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = m.n;
      for (std::size_t i = 0; i < m.n; ++i) {
        if (!taken[i] && (far == m.n || current.dist[i] > current.dist[far])) far = i;
      }
      taken[far] = true;
      reseeded = true;
      std::copy(m.row(far), m.row(far) + m.d, &next[c * m.d]);
    }
    double movement = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      movement = std::max(movement, std::sqrt(squared_distance(&next[c * m.d], &model.centroids[c * m.d], m.d)));
    }
    model.centroids = std::move(next);
    model.iterations_run = iter;
    if (reseeded) model.reseeded_iterations.push_back(iter);
    Assignment updated = assign_points(m, model);
    model.inertia_trace.push_back(updated.inertia);
    const bool stable = updated.cluster == current.cluster;
    current = std::move(updated);
    if (stable || movement <= tol) break;
  }
  model.inertia = current.inertia;
  model.assignments = std::move(current.cluster);
  return model;
}

KMeansModel kmeans_train(const FeatureMatrix& m, const KMeansParams& params) {
  return kmeans_train_from(m, kmeans_plus_plus(m, params.k, params.seed), params.k, params.max_iter, params.tol);
}

Relation kmeans_predict(const KMeansModel& model, const FeatureMatrix& m) {
  if (m.d != model.d) {
    throw Error(ErrorCode::InvalidArgument, "model expects " + std::to_string(model.d) + " features, got " +
                                                std::to_string(m.d));
  }
  std::vector<Row> extra(m.n);
  for (std::size_t i = 0; i < m.n; ++i) extra[i].emplace_back(static_cast<std::int64_t>(nearest_centroid(model, m.row(i))));
  return append_columns(m.source, {{"cluster", ColumnType::Int64}}, extra);
}

// ---- logistic regression --------------------------------------------------

double sigmoid(double z) {
  z = std::clamp(z, -kLogitClamp, kLogitClamp);
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

LossGrad logreg_loss_grad(const std::vector<double>& weights, double bias, const FeatureMatrix& m,
                          const std::vector<double>& labels) {
  if (weights.size() != m.d) throw Error(ErrorCode::InvalidArgument, "weight vector length does not match features");
  if (labels.size() != m.n) throw Error(ErrorCode::InvalidArgument, "label count does not match rows");
  if (m.n == 0) throw Error(ErrorCode::InvalidArgument, "loss needs at least one row");
  ExactSum loss;
  std::vector<ExactSum> grad(m.d + 1);
  for (std::size_t i = 0; i < m.n; ++i) {
    double z = bias;
    for (std::size_t j = 0; j < m.d; ++j) z += weights[j] * m.at(i, j);
    z = std::clamp(z, -kLogitClamp, kLogitClamp);
    const double y = labels[i];
    // log(1 + e^z) - y z, written to avoid overflow.
    loss.add(std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - y * z);
    const double r = sigmoid(z) - y;
    for (std::size_t j = 0; j < m.d; ++j) grad[j].add(r * m.at(i, j));
    grad[m.d].add(r);
  }
  const double n = static_cast<double>(m.n);
  LossGrad out;
  out.loss = loss.result() / n;
  for (const auto& g : grad) out.grad.push_back(g.result() / n);
  return out;
}

LogRegModel logreg_train(const FeatureMatrix& m, const std::vector<double>& labels, double lr, std::int64_t epochs,
                         std::uint64_t /*seed*/) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (epochs < 0) throw Error(ErrorCode::InvalidArgument, "epochs must be non-negative");
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
  }
  LogRegModel model;
  model.weights.assign(m.d, 0.0);
  LossGrad lg = logreg_loss_grad(model.weights, model.bias, m, labels);
  model.loss_trace.push_back(lg.loss);
  for (std::int64_t e = 0; e < epochs; ++e) {
    for (std::size_t j = 0; j < m.d; ++j) model.weights[j] -= lr * lg.grad[j];
    model.bias -= lr * lg.grad[m.d];
    const bool finite = std::isfinite(model.bias) &&
                        std::all_of(model.weights.begin(), model.weights.end(), [](double w) { return std::isfinite(w); });
    if (!finite) {
      throw Error(ErrorCode::Runtime, "training diverged at epoch " + std::to_string(e + 1) + "; lower the learning rate");
    }
    lg = logreg_loss_grad(model.weights, model.bias, m, labels);
    if (!std::isfinite(lg.loss)) {
      throw Error(ErrorCode::Runtime, "training diverged at epoch " + std::to_string(e + 1) + "; lower the learning rate");
    }
    model.loss_trace.push_back(lg.loss);
  }
  model.training_loss = lg.loss;
  return model;
}

Relation logreg_predict(const LogRegModel& model, const FeatureMatrix& m) {
  if (m.d != model.weights.size()) {
    throw Error(ErrorCode::InvalidArgument, "model expects " + std::to_string(model.weights.size()) +
                                                " features, got " + std::to_string(m.d));
  }
  std::vector<Row> extra(m.n);
  for (std::size_t i = 0; i < m.n; ++i) {
    double z = model.bias;
    for (std::size_t j = 0; j < m.d; ++j) z += model.weights[j] * m.at(i, j);
    const double p = sigmoid(z);
    extra[i] = {Value(p), Value(static_cast<std::int64_t>(p >= 0.5 ? 1 : 0))};
  }
  return append_columns(m.source, {{"probability", ColumnType::Float64}, {"label", ColumnType::Int64}}, extra);
}

nlohmann::json to_json(const KMeansModel& model) {
  auto centroids = nlohmann::json::array();
  for (std::size_t c = 0; c < model.k; ++c) {
    centroids.push_back(std::vector<double>(model.centroids.begin() + static_cast<std::ptrdiff_t>(c * model.d),
                                            model.centroids.begin() + static_cast<std::ptrdiff_t>((c + 1) * model.d)));
  }
  return {{"k", model.k}, {"centroids", centroids}, {"inertia", model.inertia},
          {"iterations_run", model.iterations_run}};
}

nlohmann::json to_json(const LogRegModel& model) {
  return {{"weights", model.weights}, {"bias", model.bias}, {"training_loss", model.training_loss}};
}

}  // namespace hmdap::ml
