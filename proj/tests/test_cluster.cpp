#include "oracles.hpp"
#include "support.hpp"
#include "stackinsights/cluster.hpp"

using namespace stackinsights;

namespace {

Eigen::MatrixXd column(std::initializer_list<double> v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

Eigen::MatrixXd random_points(Rng& rng, Eigen::Index n, Eigen::Index dims) {
  Eigen::MatrixXd p(n, dims);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dims; ++j) p(i, j) = std::round(rng.uniform() * 20) / 2;
  }
  return p;
}

}  // namespace

TEST_SUITE("cluster") {

TEST_CASE("k = n gives singletons") {
  const auto p = column({3, 1, 4, 1.5, 9});
  const auto a = kmeans(p, {.k = 5});
  CHECK(a.objective == 0.0);
  for (auto s : a.sizes()) CHECK(s == 1);
}

TEST_CASE("four 1-D points into two clusters") {
  const auto p = column({0, 1, 10, 11});
  const auto a = kmeans(p, {.k = 2});
  CHECK(a.labels[0] == a.labels[1]);
  CHECK(a.labels[2] == a.labels[3]);
  CHECK(a.labels[0] != a.labels[2]);
  CHECK(a.objective == doctest::Approx(1.0));
  CHECK(a.objective == doctest::Approx(oracle::kmeans_optimum(p, 2)));
  CHECK(a.centroids(a.labels[0], 0) == doctest::Approx(0.5));
  CHECK(a.centroids(a.labels[2], 0) == doctest::Approx(10.5));
}

TEST_CASE("argument errors") {
  const auto p = column({0, 1});
  CHECK_THROWS_AS(kmeans(p, {.k = 3}), Error);
  CHECK_THROWS_AS(kmeans(p, {.k = 1, .max_iter = 0}), Error);
  auto bad = p;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(kmeans(bad, {.k = 1}), Error);
}

TEST_CASE("representative examples") {
  CHECK(representative(column({0, 1, 5}), {0, 0, 0}, 0) == 1);
  CHECK(representative(column({2, 2, 7}), {0, 0, 0}, 0) == 0);
  CHECK(representative(column({4, 8}), {1, 0}, 0) == 1);
  CHECK_THROWS_AS(representative(column({4, 8}), {1, 1}, 0), Error);
}

TEST_CASE("elbow on three unequal blobs") {
  Eigen::MatrixXd p(60, 1);
  Rng rng(9);
  for (Eigen::Index i = 0; i < 60; ++i) {
    const double center = i < 5 ? -10.0 : (i < 55 ? 0.0 : 10.0);
    p(i, 0) = center + (rng.uniform() - 0.5) * 0.5;
  }
  const auto curve = elbow(p, 1, 6);
  CHECK(curve.explained[0] == 0.0);
  CHECK(curve.suggested_k == 3);
  // Oracle: for 1-D points the optimal k-partition is contiguous; solve it by dynamic programming.
  std::vector<double> xs(p.data(), p.data() + p.rows());
  std::sort(xs.begin(), xs.end());
  const auto n = xs.size();
  const auto cost = [&](std::size_t a, std::size_t b) {
    double m = 0;
    for (std::size_t i = a; i < b; ++i) m += xs[i];
    m /= static_cast<double>(b - a);
    double s = 0;
    for (std::size_t i = a; i < b; ++i) s += (xs[i] - m) * (xs[i] - m);
    return s;
  };
  std::vector<std::vector<double>> dp(7, std::vector<double>(n + 1, std::numeric_limits<double>::infinity()));
  dp[0][0] = 0;
  for (std::size_t k = 1; k <= 6; ++k) {
    for (std::size_t j = 1; j <= n; ++j) {
      for (std::size_t i = k - 1; i < j; ++i) dp[k][j] = std::min(dp[k][j], dp[k - 1][i] + cost(i, j));
    }
  }
  for (std::size_t k = 1; k <= 6; ++k) CHECK(curve.objectives[k - 1] == doctest::Approx(dp[k][n]).epsilon(1e-9));
}

TEST_CASE("sparse and dense rows agree") {
  Rng rng(4);
  const auto dense = random_points(rng, 30, 6);
  const FeatureMatrix sparse = dense.sparseView();
  const auto a = kmeans(dense, {.k = 4});
  const auto b = kmeans(sparse, {.k = 4});
  CHECK(a.labels == b.labels);
  CHECK(a.objective == doctest::Approx(b.objective));
}

TEST_CASE("property: small instances reach the exhaustive optimum") {
  testing::for_all(51, [&](Rng& rng) {
    const auto n = 2 + static_cast<Eigen::Index>(rng.below(7));
    const auto p = random_points(rng, n, 1 + static_cast<Eigen::Index>(rng.below(2)));
    const int k = 1 + static_cast<int>(rng.below(std::min<std::uint64_t>(3, static_cast<std::uint64_t>(n))));
    const auto a = kmeans(p, {.k = k, .seed = rng.next(), .restarts = 20});
    CHECK(a.objective == doctest::Approx(oracle::kmeans_optimum(p, k)).epsilon(1e-12));
  });
}

TEST_CASE("property: Lloyd objective never increases and centroids are member means") {
  testing::for_all(52, [&](Rng& rng) {
    const auto n = 3 + static_cast<Eigen::Index>(rng.below(40));
    const auto p = random_points(rng, n, 1 + static_cast<Eigen::Index>(rng.below(4)));
    const int k = 1 + static_cast<int>(rng.below(std::min<std::uint64_t>(6, static_cast<std::uint64_t>(n))));
    const auto a = kmeans(p, {.k = k, .seed = rng.next(), .restarts = 1});
    for (std::size_t i = 1; i < a.trace.size(); ++i) CHECK(a.trace[i] <= a.trace[i - 1] + 1e-9);
    CHECK(a.objective >= 0.0);
    CHECK(a.labels.size() == static_cast<std::size_t>(n));
    for (int c = 0; c < k; ++c) {
      const auto m = a.members(c);
      if (m.empty()) continue;
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(p.cols());
      for (auto i : m) mean += p.row(i);
      mean /= static_cast<double>(m.size());
      CHECK((mean - a.centroids.row(c)).norm() < 1e-9);
    }
    // The first of five restarts is the single run with the same seed.
    const auto seed = rng.next();
    const auto first = kmeans(p, {.k = k, .seed = seed, .restarts = 1});
    const auto five = kmeans(p, {.k = k, .seed = seed, .restarts = 5});
    CHECK(five.objective <= first.objective + 1e-12);
  });
}

TEST_CASE("property: representative is translation invariant") {
  testing::for_all(53, [&](Rng& rng) {
    const auto n = 1 + static_cast<Eigen::Index>(rng.below(10));
    const auto p = random_points(rng, n, 2);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = static_cast<int>(rng.below(2));
    labels[0] = 0;
    Eigen::RowVectorXd shift(2);
    shift << std::round(rng.uniform() * 100) - 50, std::round(rng.uniform() * 100) - 50;
    const Eigen::MatrixXd moved = p.rowwise() + shift;
    CHECK(representative(p, labels, 0) == representative(moved, labels, 0));
  });
}

}
