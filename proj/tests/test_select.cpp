#include <cmath>

#include "support.hpp"
#include "stackinsights/select.hpp"

using namespace stackinsights;

namespace {

// Direct summation over a contingency table given as nested vectors.
double oracle_mi(const std::vector<std::vector<double>>& t) {
  double n = 0;
  std::vector<double> rows(t.size(), 0), cols(t[0].size(), 0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t[i].size(); ++j) {
      n += t[i][j];
      rows[i] += t[i][j];
      cols[j] += t[i][j];
    }
  }
  double mi = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t[i].size(); ++j) {
      if (t[i][j] > 0) mi += t[i][j] / n * std::log(t[i][j] * n / (rows[i] * cols[j]));
    }
  }
  return mi;
}

double entropy(double p) { return p <= 0 || p >= 1 ? 0 : -p * std::log(p) - (1 - p) * std::log(1 - p); }

}  // namespace

TEST_SUITE("select") {

TEST_CASE("mutual information examples") {
  Eigen::MatrixXd t(2, 2);
  t << 30, 10, 10, 30;
  CHECK(std::abs(mutual_information(t) - oracle_mi({{30, 10}, {10, 30}})) < 1e-9);

  const std::vector<int> y = {1, 0, 0, 1, 1, 1, 0, 1};
  std::vector<double> same(y.begin(), y.end());
  CHECK(std::abs(mutual_information(same, y, 2) - entropy(5.0 / 8)) < 1e-12);
  const std::vector<double> constant(8, 3.0);
  CHECK(mutual_information(constant, y, 10) == 0.0);
  const std::vector<int> flat(8, 1);
  CHECK(mutual_information(same, flat, 10) == 0.0);
}

TEST_CASE("planted extension ranks first") {
  std::vector<FileMeta> files;
  LabelVector y(200);
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    FileMeta f;
    f.volume_id = "V1";
    const bool secret = i % 2 == 0;
    f.file_name = testing::random_word(rng) + (secret ? ".secret" : (rng.bernoulli(0.5) ? ".txt" : ".csv"));
    f.extension = extension_of(f.file_name);
    f.path = rng.bernoulli(0.5) ? "u1" : "u2";
    f.user_folder = f.path;
    f.file_size = rng.below(1000);
    files.push_back(f);
    y(i) = secret;
  }
  const auto spec = fit_spec(files);
  const auto x = encode_batch(files, spec);
  const auto ranked = rank_features(x, y, spec);
  REQUIRE(ranked.size() == spec.size());
  CHECK(ranked[0].name == ".secret");
  CHECK(ranked[0].category == FeatureCategory::Extension);
  CHECK(std::abs(ranked[0].mi - std::log(2.0)) < 1e-12);
  CHECK(category_histogram(top_k(x, y, spec, 10)).size() >= 1);
}

TEST_CASE("property: contingency MI matches direct summation and is nonnegative") {
  testing::for_all(41, [&](Rng& rng) {
    const auto r = 1 + rng.below(5);
    Eigen::MatrixXd t(static_cast<Eigen::Index>(r), 2);
    std::vector<std::vector<double>> v(r, std::vector<double>(2));
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        v[i][j] = rng.bernoulli(0.2) ? 0.0 : static_cast<double>(rng.below(50));
        t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i][j];
      }
    }
    if (t.sum() == 0) return;
    const double mi = mutual_information(t);
    CHECK(mi >= 0.0);
    CHECK(std::abs(mi - oracle_mi(v)) < 1e-9);
    // Product tables are independent.
    Eigen::MatrixXd prod = t.rowwise().sum() * t.colwise().sum();
    CHECK(std::abs(mutual_information(prod)) < 1e-12);
  });
}

TEST_CASE("property: MI is symmetric for binary features") {
  testing::for_all(42, [&](Rng& rng) {
    const auto n = 2 + rng.below(40);
    std::vector<double> a(n), b(n);
    std::vector<int> ai(n), bi(n);
    for (std::size_t i = 0; i < n; ++i) {
      ai[i] = static_cast<int>(rng.below(2));
      bi[i] = rng.bernoulli(0.7) ? ai[i] : static_cast<int>(rng.below(2));
      a[i] = ai[i];
      b[i] = bi[i];
    }
    CHECK(std::abs(mutual_information(a, bi, 2) - mutual_information(b, ai, 2)) < 1e-12);
  });
}

TEST_CASE("property: ranking is a sorted, deterministic permutation") {
  const auto now = testing::at("2018-06-01T00:00:00Z");
  testing::for_all(43, [&](Rng& rng) {
    std::vector<FileMeta> files(2 + rng.below(12));
    LabelVector y(static_cast<Eigen::Index>(files.size()));
    for (std::size_t i = 0; i < files.size(); ++i) {
      files[i] = testing::random_file(rng, now);
      y(static_cast<Eigen::Index>(i)) = static_cast<int>(rng.below(2));
    }
    const auto spec = fit_spec(files);
    const auto x = encode_batch(files, spec);
    const auto ranked = top_k(x, y, spec, spec.size());
    std::vector<bool> seen(spec.size(), false);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      CHECK(ranked[i].mi >= 0.0);
      seen[ranked[i].index] = true;
      if (i > 0) {
        const bool ordered = ranked[i - 1].mi > ranked[i].mi ||
                             (ranked[i - 1].mi == ranked[i].mi && ranked[i - 1].index < ranked[i].index);
        CHECK(ordered);
      }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
    const auto again = top_k(x, y, spec, spec.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) CHECK(again[i].index == ranked[i].index);
    std::size_t total = 0;
    const auto k = std::min<std::size_t>(5, spec.size());
    for (const auto& [c, n] : category_histogram(top_k(x, y, spec, k))) total += n;
    CHECK(total == k);
  });
}

}
