#include <algorithm>
#include <limits>
#include <numeric>

#include "stackinsights/learn.hpp"
#include "stackinsights/rng.hpp"

namespace stackinsights {

// Dual coordinate descent for the L2-regularized hinge loss. The bias is an
// extra feature fixed at 1, so it is regularized like the weights.
LinearModel train_linear_svm(const FeatureMatrix& x, const LabelVector& y, const Eigen::VectorXd& w, double C,
                             std::uint64_t seed, int max_epochs) {
  constexpr double kStopGap = 1e-3;
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(p);
  double bias = 0;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd qii(n);
  for (Eigen::Index i = 0; i < n; ++i) qii(i) = x.row(i).squaredNorm() + 1.0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(seed);

  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    rng.shuffle(std::span<Eigen::Index>(order));
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (const Eigen::Index i : order) {
      const double yi = y(i) == 1 ? 1.0 : -1.0;
      const double upper = C * w(i);
      double dot = bias;
      for (FeatureMatrix::InnerIterator it(x, i); it; ++it) dot += weights(it.col()) * it.value();
      const double g = yi * dot - 1.0;
      double pg = g;
      if (alpha(i) <= 0) pg = std::min(g, 0.0);
      else if (alpha(i) >= upper) pg = std::max(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (pg == 0) continue;
      const double old = alpha(i);
      alpha(i) = std::clamp(old - g / qii(i), 0.0, upper);
      const double delta = (alpha(i) - old) * yi;
      if (delta == 0) continue;
      for (FeatureMatrix::InnerIterator it(x, i); it; ++it) weights(it.col()) += delta * it.value();
      bias += delta;
    }
    if (pg_max - pg_min <= kStopGap) break;
  }
  return {weights, bias};
}

}  // namespace stackinsights
