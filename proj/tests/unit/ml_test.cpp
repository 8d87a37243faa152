#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hmdap/error.hpp"
#include "hmdap/ml.hpp"
#include "oracles.hpp"

using namespace hmdap;
using namespace hmdap::ml;

namespace {

FeatureMatrix points(const std::vector<std::vector<double>>& pts) {
  std::vector<double> v;
  for (const auto& p : pts) v.insert(v.end(), p.begin(), p.end());
  return matrix_from_values(pts.size(), pts.empty() ? 0 : pts[0].size(), std::move(v));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::Internal;
}

std::vector<std::vector<double>> random_points(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> out(n, std::vector<double>(d));
  for (auto& p : out) {
    const double shift = rng() % 2 ? 4.0 : -4.0;
    for (auto& x : p) x = g(rng) + shift;
  }
  return out;
}

}  // namespace

TEST(Matrix, FromRelation) {
  const Relation r(Schema{{"fare", ColumnType::Float64}, {"duration", ColumnType::Int64}, {"city", ColumnType::Utf8}},
                   std::vector<Row>{{Value(1.5), Value(3), Value("a")}, {Value(2.0), Value(4), Value("b")}, {Value(0.5), Value(1), Value("c")}});
  const auto m = relation_to_matrix(r, {"fare", "duration"});
  EXPECT_EQ(m.n, 3u);
  EXPECT_EQ(m.d, 2u);
  EXPECT_EQ(m.at(1, 1), 4.0);
  EXPECT_EQ(m.source.row_count(), 3u);
  EXPECT_EQ(code_of([&] { relation_to_matrix(r, {"city"}); }), ErrorCode::Type);
}

TEST(Matrix, NullRowRejectedWithIndex) {
  const Relation r(Schema{{"fare", ColumnType::Float64}}, std::vector<Row>{{Value(1.0)}, {Value::null()}});
  try {
    relation_to_matrix(r, {"fare"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos) << e.what();
  }
  EXPECT_THROW(relation_to_matrix(Relation(Schema{{"fare", ColumnType::Float64}}), {"fare"}), Error);
}

TEST(Matrix, LabelColumn) {
  const Relation r(Schema{{"x", ColumnType::Float64}, {"y", ColumnType::Bool}, {"z", ColumnType::Int64}},
                   std::vector<Row>{{Value(1.0), Value(true), Value(0)}, {Value(2.0), Value(false), Value(2)}});
  EXPECT_EQ(relation_to_matrix(r, {"x"}, "y").labels, (std::vector<double>{1.0, 0.0}));
  EXPECT_THROW(relation_to_matrix(r, {"x"}, "z"), Error);
}

TEST(KMeans, SingleClusterIsMean) {
  const auto m = points({{0, 0}, {2, 0}, {1, 3}});
  const auto model = kmeans_train(m, {1, 100, 1e-4, 7});
  EXPECT_DOUBLE_EQ(model.centroids[0], 1.0);
  EXPECT_DOUBLE_EQ(model.centroids[1], 1.0);
  EXPECT_EQ(model.iterations_run, 1);
}

TEST(KMeans, SeparatedMeans) {
  const auto m = points({{0, 0}, {0, 0.1}, {10, 10}, {10, 10.1}});
  const auto model = kmeans_train(m, {2, 100, 1e-4, 3});
  std::vector<std::pair<double, double>> c = {{model.centroids[0], model.centroids[1]},
                                              {model.centroids[2], model.centroids[3]}};
  std::sort(c.begin(), c.end());
  EXPECT_NEAR(c[0].first, 0.0, 1e-12);
  EXPECT_NEAR(c[0].second, 0.05, 1e-12);
  EXPECT_NEAR(c[1].first, 10.0, 1e-12);
  EXPECT_NEAR(c[1].second, 10.05, 1e-12);
}

TEST(KMeans, Errors) {
  const auto m = points({{0, 0}, {1, 1}});
  EXPECT_THROW(kmeans_train(m, {3, 10, 1e-4, 0}), Error);
  EXPECT_THROW(kmeans_train(m, {0, 10, 1e-4, 0}), Error);
  KMeansModel model = kmeans_train(m, {1, 10, 1e-4, 0});
  EXPECT_THROW(kmeans_predict(model, points({{1, 2, 3}})), Error);
}

TEST(KMeans, DeterministicForSeed) {
  std::mt19937_64 rng(3);
  const auto m = points(random_points(rng, 60, 3));
  const auto a = kmeans_train(m, {4, 100, 1e-6, 11});
  const auto b = kmeans_train(m, {4, 100, 1e-6, 11});
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.assignments, b.assignments);
}

TEST(KMeans, PredictTieRule) {
  KMeansModel model;
  model.k = 2;
  model.d = 1;
  model.centroids = {-1.0, 1.0};
  const double zero = 0.0, one = 1.0;
  EXPECT_EQ(nearest_centroid(model, &zero), 0u);
  EXPECT_EQ(nearest_centroid(model, &one), 1u);
}

TEST(KMeans, TwelvePointsNearBruteForce) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<std::vector<double>> pts(12, std::vector<double>(2));
  for (auto& p : pts)
    for (auto& x : p) x = u(rng);
  const auto model = kmeans_train(points(pts), {2, 100, 1e-9, 5});
  EXPECT_LE(model.inertia, 1.05 * hmdap::testing::brute_force_two_means(pts));
}

// Properties over random instances: inertia never increases, predictions
// reproduce the training assignment, and the result is a Lloyd fixed point.
TEST(KMeansProperty, MonotoneAndFixedPoint) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 5 + rng() % 80, d = 1 + rng() % 4, k = 1 + rng() % 5;
    const auto m = points(random_points(rng, n, d));
    const auto model = kmeans_train(m, {k, 200, 0.0, rng()});
    for (std::size_t i = 1; i < model.inertia_trace.size(); ++i) {
      EXPECT_LE(model.inertia_trace[i], model.inertia_trace[i - 1] * (1 + 1e-12) + 1e-12);
    }
    EXPECT_GE(model.inertia, 0.0);
    const auto pred = kmeans_predict(model, m);
    const auto rows = pred.rows();
    ASSERT_EQ(rows.size(), n);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(static_cast<std::size_t>(rows[i].back().as_int()), model.assignments[i]);
      EXPECT_LT(rows[i].back().as_int(), static_cast<std::int64_t>(k));
    }
    if (model.iterations_run < 200 && model.reseeded_iterations.empty()) {
      for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> mean(d, 0.0);
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (model.assignments[i] != c) continue;
          ++count;
          for (std::size_t j = 0; j < d; ++j) mean[j] += m.at(i, j);
        }
        if (!count) continue;
        for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(model.centroids[c * d + j], mean[j] / count, 1e-9);
      }
    }
  }
}

TEST(KMeansProperty, RowOrderInvariantFromSameStart) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    auto pts = random_points(rng, 40, 2);
    const auto init = kmeans_plus_plus(points(pts), 3, 9);
    const auto a = kmeans_train_from(points(pts), init, 3, 100, 0.0);
    std::shuffle(pts.begin(), pts.end(), rng);
    const auto b = kmeans_train_from(points(pts), init, 3, 100, 0.0);
    ASSERT_EQ(a.centroids.size(), b.centroids.size());
    for (std::size_t i = 0; i < a.centroids.size(); ++i) EXPECT_NEAR(a.centroids[i], b.centroids[i], 1e-12);
  }
}

TEST(LogReg, LossAtZeroIsLn2) {
  std::mt19937_64 rng(2);
  const auto m = points(random_points(rng, 20, 3));
  std::vector<double> y(20);
  for (auto& v : y) v = static_cast<double>(rng() % 2);
  const auto lg = logreg_loss_grad({0, 0, 0}, 0.0, m, y);
  EXPECT_NEAR(lg.loss, std::log(2.0), 1e-12);
}

TEST(LogReg, SymmetricDataHasZeroBiasGradient) {
  const auto m = points({{1.5}, {-1.5}, {0.25}, {-0.25}});
  const auto lg = logreg_loss_grad({0}, 0.0, m, {1, 0, 1, 0});
  EXPECT_NEAR(lg.grad[1], 0.0, 1e-15);
}

TEST(LogReg, SeparableTraining) {
  const auto m = points({{-1}, {1}});
  const auto model = logreg_train(m, {0, 1}, 0.5, 200);
  EXPECT_GT(model.weights[0], 0.0);
  EXPECT_LT(model.training_loss, std::log(2.0));
  EXPECT_NEAR(model.training_loss, logreg_loss_grad(model.weights, model.bias, m, {0, 1}).loss, 1e-15);
  const auto zero = logreg_train(m, {0, 1}, 0.5, 0);
  EXPECT_EQ(zero.weights, std::vector<double>{0.0});
  EXPECT_NEAR(zero.training_loss, std::log(2.0), 1e-15);
}

TEST(LogReg, DivergenceIsReported) {
  std::mt19937_64 rng(6);
  auto pts = random_points(rng, 30, 2);
  for (auto& p : pts)
    for (auto& x : p) x *= 1e200;
  std::vector<double> y(30);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(i % 2);
  EXPECT_THROW(logreg_train(points(pts), y, 1e300, 50), Error);
}

TEST(LogReg, PredictBoundaryAndClamp) {
  LogRegModel model;
  model.weights = {1.0};
  const auto out = logreg_predict(model, points({{0.0}, {30.0}, {-3.0}}));
  const auto rows = out.rows();
  EXPECT_DOUBLE_EQ(rows[0][1].as_float(), 0.5);
  EXPECT_EQ(rows[0][2], Value(1));
  EXPECT_NEAR(rows[1][1].as_float(), 1.0, 1e-12);
  EXPECT_EQ(rows[2][2], Value(0));
  EXPECT_THROW(logreg_predict(model, points({{1.0, 2.0}})), Error);
}

TEST(LogReg, OutputNameCollisionGetsSuffix) {
  const Relation r(Schema{{"x", ColumnType::Float64}, {"label", ColumnType::Bool}, {"label_ml", ColumnType::Int64}},
                   std::vector<Row>{{Value(1.0), Value(true), Value(0)}});
  const auto m = relation_to_matrix(r, {"x"}, "label");
  LogRegModel model;
  model.weights = {1.0};
  const auto out = logreg_predict(model, m);
  EXPECT_EQ(out.schema()[3].name, "probability");
  EXPECT_EQ(out.schema()[4].name, "label_ml_ml");
}

TEST(LogRegProperty, LossNonIncreasingForSmallRate) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    auto pts = random_points(rng, 40, 3);
    std::vector<double> y(40);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = pts[i][0] + 0.5 * pts[i][1] > 0 ? 1.0 : 0.0;
    // Standardize each feature.
    for (std::size_t j = 0; j < 3; ++j) {
      double mean = 0, var = 0;
      for (auto& p : pts) mean += p[j] / 40;
      for (auto& p : pts) var += (p[j] - mean) * (p[j] - mean) / 40;
      for (auto& p : pts) p[j] = (p[j] - mean) / std::sqrt(var);
    }
    const auto model = logreg_train(points(pts), y, 1e-3, 100);
    for (std::size_t i = 1; i < model.loss_trace.size(); ++i) EXPECT_LE(model.loss_trace[i], model.loss_trace[i - 1]);
  }
}

TEST(LogRegProperty, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 50, d = 1 + rng() % 5;
    std::vector<std::vector<double>> x(n, std::vector<double>(d));
    for (auto& p : x)
      for (auto& v : p) v = g(rng);
    std::vector<double> y(n), w(d);
    for (auto& v : y) v = static_cast<double>(rng() % 2);
    for (auto& v : w) v = g(rng);
    const double b = g(rng);
    const auto lg = logreg_loss_grad(w, b, points(x), y);
    const auto fd = hmdap::testing::finite_difference_gradient(w, b, x, y, 1e-5);
    double diff = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i <= d; ++i) {
      diff += (lg.grad[i] - fd[i]) * (lg.grad[i] - fd[i]);
      na += lg.grad[i] * lg.grad[i];
      nb += fd[i] * fd[i];
    }
    EXPECT_LE(std::sqrt(diff) / (std::sqrt(na) + std::sqrt(nb) + 1e-300), 1e-5);
    EXPECT_NEAR(lg.loss, hmdap::testing::naive_log_loss(w, b, x, y), 1e-12);
  }
}

TEST(Registry, BuiltinsAndParams) {
  const auto reg = EstimatorRegistry::with_builtins();
  EXPECT_TRUE(reg.contains("KMeans"));
  EXPECT_TRUE(reg.contains("LogisticRegression"));
  EXPECT_EQ(reg.complete_params("KMeans", {"2", "50"}).size(), 4u);
  EXPECT_EQ(reg.complete_params("KMeans", {"2", "50"})[0], "2");
  EXPECT_THROW(reg.complete_params("KMeans", {}), Error);
  EXPECT_THROW(reg.complete_params("KMeans", {"two"}), Error);
  EXPECT_THROW(reg.complete_params("KMeans", {"1", "2", "3", "4", "5"}), Error);
  EXPECT_THROW(reg.info("Nope"), Error);
  EXPECT_TRUE(reg.info("LogisticRegression").needs_label);
}

TEST(Registry, KMeansEstimatorAddsClusterColumn) {
  const auto reg = EstimatorRegistry::with_builtins();
  const auto est = reg.create("KMeans", {"2", "50"});
  const auto fit = est->fit_predict(points({{0, 0}, {0, 1}, {9, 9}, {9, 8}}));
  EXPECT_EQ(fit.predictions.schema()[fit.predictions.schema().size() - 1].name, "cluster");
  EXPECT_EQ(fit.model_summary["algorithm"], "KMeans");
  EXPECT_EQ(fit.model_summary["model"]["centroids"].size(), 2u);
}
