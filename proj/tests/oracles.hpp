#pragma once

// Brute-force reference computations shared by the unit and acceptance tests.
// Each works from the textbook definition on dense data, independent of the
// library's implementation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "stackinsights/learn.hpp"

namespace oracle {

// Posterior P(sensitive | x) of a multinomial naive Bayes model fitted with
// Laplace smoothing `alpha` and empirical class priors, computed as a ratio of
// products.
inline double nb_posterior(const Eigen::MatrixXd& train, const Eigen::VectorXi& y, double alpha,
                           const Eigen::RowVectorXd& x) {
  const auto p = train.cols();
  double joint[2];
  for (int c = 0; c < 2; ++c) {
    double n_c = 0, total = 0;
    std::vector<double> feature(static_cast<std::size_t>(p), 0.0);
    for (Eigen::Index i = 0; i < train.rows(); ++i) {
      if (y(i) != c) continue;
      n_c += 1;
      for (Eigen::Index j = 0; j < p; ++j) {
        feature[static_cast<std::size_t>(j)] += train(i, j);
        total += train(i, j);
      }
    }
    double prob = n_c / static_cast<double>(train.rows());
    for (Eigen::Index j = 0; j < p; ++j) {
      const double theta = (feature[static_cast<std::size_t>(j)] + alpha) / (total + alpha * static_cast<double>(p));
      prob *= std::pow(theta, x(j));
    }
    joint[c] = prob;
  }
  return joint[1] / (joint[0] + joint[1]);
}

// Within-cluster sum of squares of the best assignment of the rows of `pts`
// to at most k clusters, by enumerating all k^n labelings.
inline double kmeans_optimum(const Eigen::MatrixXd& pts, int k) {
  const auto n = static_cast<int>(pts.rows());
  std::vector<int> label(static_cast<std::size_t>(n), 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    double obj = 0;
    for (int c = 0; c < k; ++c) {
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(pts.cols());
      int count = 0;
      for (int i = 0; i < n; ++i) {
        if (label[static_cast<std::size_t>(i)] == c) {
          sum += pts.row(i);
          ++count;
        }
      }
      if (count == 0) continue;
      const Eigen::RowVectorXd mean = sum / count;
      for (int i = 0; i < n; ++i) {
        if (label[static_cast<std::size_t>(i)] == c) obj += (pts.row(i) - mean).squaredNorm();
      }
    }
    best = std::min(best, obj);
    int pos = 0;
    while (pos < n && ++label[static_cast<std::size_t>(pos)] == k) label[static_cast<std::size_t>(pos++)] = 0;
    if (pos == n) break;
  }
  return best;
}

// Plug-in mutual information (nats) of two discrete sequences by direct
// summation over the joint histogram.
inline double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  double mi = 0;
  std::vector<int> va(a), vb(b);
  std::sort(va.begin(), va.end());
  va.erase(std::unique(va.begin(), va.end()), va.end());
  std::sort(vb.begin(), vb.end());
  vb.erase(std::unique(vb.begin(), vb.end()), vb.end());
  for (int x : va) {
    for (int z : vb) {
      double nxy = 0, nx = 0, nz = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        nxy += a[i] == x && b[i] == z;
        nx += a[i] == x;
        nz += b[i] == z;
      }
      if (nxy > 0) mi += nxy / n * std::log(nxy * n / (nx * nz));
    }
  }
  return mi;
}

// Central finite-difference gradient of the regularized logistic loss over (w, b).
inline Eigen::VectorXd logistic_fd_gradient(const stackinsights::LinearModel& m, const stackinsights::FeatureMatrix& x,
                                            const stackinsights::LabelVector& y, const Eigen::VectorXd& weights,
                                            double C, double h = 1e-5) {
  const auto d = m.weights.size();
  Eigen::VectorXd g(d + 1);
  for (Eigen::Index j = 0; j <= d; ++j) {
    auto plus = m, minus = m;
    if (j < d) {
      plus.weights(j) += h;
      minus.weights(j) -= h;
    } else {
      plus.bias += h;
      minus.bias -= h;
    }
    g(j) = (stackinsights::logistic_objective(plus, x, y, weights, C) -
            stackinsights::logistic_objective(minus, x, y, weights, C)) /
           (2 * h);
  }
  return g;
}

}  // namespace oracle
