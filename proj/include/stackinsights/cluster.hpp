#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "stackinsights/common.hpp"
#include "stackinsights/rng.hpp"

namespace stackinsights {

struct KMeansOptions {
  int k = 3;
  std::uint64_t seed = 42;
  int max_iter = 300;
  int restarts = 10;
};

/// Partition of n points into k clusters. `centroids` is k x d; `objective`
/// is the total within-cluster squared Euclidean distance.
template <typename Scalar>
struct ClusterAssignment {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  int k = 0;
  std::vector<int> labels;
  Matrix centroids;
  Scalar objective = 0;
  std::vector<Scalar> trace;  // objective after each Lloyd update
  int iterations = 0;

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++s[static_cast<std::size_t>(l)];
    return s;
  }

  std::vector<Eigen::Index> members(int cluster) const {
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cluster) out.push_back(static_cast<Eigen::Index>(i));
    }
    return out;
  }
};

namespace detail {

template <typename Derived>
class DenseRows {
 public:
  using Scalar = typename Derived::Scalar;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  explicit DenseRows(const Eigen::MatrixBase<Derived>& m) : m_(m.derived()) {}

  Eigen::Index rows() const { return m_.rows(); }
  Eigen::Index cols() const { return m_.cols(); }
  bool all_finite() const { return m_.allFinite(); }
  // `c_norm` (the squared norm of c) is unused for dense rows.
  Scalar sq_dist(Eigen::Index i, const RowVector& c, Scalar /*c_norm*/) const { return (m_.row(i) - c).squaredNorm(); }
  RowVector row(Eigen::Index i) const { return m_.row(i); }
  void add_to(Eigen::Index i, RowVector& acc) const { acc += m_.row(i); }

 private:
  const Derived& m_;
};

template <typename Scalar_, typename StorageIndex>
class SparseRows {
 public:
  using Scalar = Scalar_;
  using Matrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, StorageIndex>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  explicit SparseRows(const Matrix& m) : m_(m), norms_(m.rows()) {
    for (Eigen::Index i = 0; i < m_.rows(); ++i) {
      Scalar s = 0;
      for (typename Matrix::InnerIterator it(m_, i); it; ++it) s += it.value() * it.value();
      norms_(i) = s;
    }
  }

  Eigen::Index rows() const { return m_.rows(); }
  Eigen::Index cols() const { return m_.cols(); }
  bool all_finite() const {
    for (Eigen::Index k = 0; k < m_.nonZeros(); ++k) {
      if (!std::isfinite(m_.valuePtr()[k])) return false;
    }
    return true;
  }
  Scalar sq_dist(Eigen::Index i, const RowVector& c, Scalar c_norm) const {
    Scalar dot = 0;
    for (typename Matrix::InnerIterator it(m_, i); it; ++it) dot += it.value() * c(it.col());
    const Scalar d = norms_(i) - 2 * dot + c_norm;
    return d > 0 ? d : Scalar(0);
  }
  RowVector row(Eigen::Index i) const {
    RowVector r = RowVector::Zero(m_.cols());
    for (typename Matrix::InnerIterator it(m_, i); it; ++it) r(it.col()) = it.value();
    return r;
  }
  void add_to(Eigen::Index i, RowVector& acc) const {
    for (typename Matrix::InnerIterator it(m_, i); it; ++it) acc(it.col()) += it.value();
  }

 private:
  const Matrix& m_;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> norms_;
};

template <typename Rows>
ClusterAssignment<typename Rows::Scalar> lloyd(const Rows& pts, int k, std::uint64_t seed, int max_iter) {
  using Scalar = typename Rows::Scalar;
  using RowVector = typename Rows::RowVector;
  const Eigen::Index n = pts.rows();
  Rng rng(seed);

  ClusterAssignment<Scalar> out;
  out.k = k;
  out.centroids.resize(k, pts.cols());

  // k-means++ seeding
  std::vector<Scalar> d2(static_cast<std::size_t>(n), std::numeric_limits<Scalar>::infinity());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  Eigen::Index first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  for (int c = 0; c < k; ++c) {
    Eigen::Index pick = first;
    if (c > 0) {
      Scalar total = 0;
      for (Scalar v : d2) total += v;
      if (total > 0) {
        const Scalar r = static_cast<Scalar>(rng.uniform()) * total;
        Scalar acc = 0;
        pick = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (d2[static_cast<std::size_t>(i)] <= 0) continue;
          acc += d2[static_cast<std::size_t>(i)];
          pick = i;
          if (acc > r) break;
        }
      } else {
        pick = 0;
        while (chosen[static_cast<std::size_t>(pick)]) ++pick;
      }
    }
    chosen[static_cast<std::size_t>(pick)] = true;
    out.centroids.row(c) = pts.row(pick);
    const RowVector center = out.centroids.row(c);
    const Scalar center_norm = center.squaredNorm();
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], pts.sq_dist(i, center, center_norm));
    }
  }

  out.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<Scalar> dist(static_cast<std::size_t>(n));
  std::vector<RowVector> centers(static_cast<std::size_t>(k));
  std::vector<Scalar> norms(static_cast<std::size_t>(k));
  const auto load_centers = [&] {
    for (int c = 0; c < k; ++c) {
      centers[static_cast<std::size_t>(c)] = out.centroids.row(c);
      norms[static_cast<std::size_t>(c)] = centers[static_cast<std::size_t>(c)].squaredNorm();
    }
  };
  const auto objective = [&] {
    Scalar obj = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(out.labels[static_cast<std::size_t>(i)]);
      obj += pts.sq_dist(i, centers[c], norms[c]);
    }
    return obj;
  };
  for (int it = 0; it < max_iter; ++it) {
    load_centers();
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      Scalar best_d = pts.sq_dist(i, centers[0], norms[0]);
      for (int c = 1; c < k; ++c) {
        const Scalar d = pts.sq_dist(i, centers[static_cast<std::size_t>(c)], norms[static_cast<std::size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      dist[static_cast<std::size_t>(i)] = best_d;
      if (out.labels[static_cast<std::size_t>(i)] != best) {
        out.labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;

    // Repair empty clusters with the point farthest from its centroid.
    auto sizes = out.sizes();
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] != 0) continue;
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (sizes[static_cast<std::size_t>(out.labels[static_cast<std::size_t>(i)])] < 2) continue;
        if (far < 0 || dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(far)]) far = i;
      }
      if (far < 0) break;
      --sizes[static_cast<std::size_t>(out.labels[static_cast<std::size_t>(far)])];
      out.labels[static_cast<std::size_t>(far)] = c;
      dist[static_cast<std::size_t>(far)] = 0;
      ++sizes[static_cast<std::size_t>(c)];
    }

    std::vector<RowVector> sums(static_cast<std::size_t>(k), RowVector::Zero(pts.cols()));
    for (Eigen::Index i = 0; i < n; ++i) pts.add_to(i, sums[static_cast<std::size_t>(out.labels[static_cast<std::size_t>(i)])]);
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) {
        out.centroids.row(c) = sums[static_cast<std::size_t>(c)] / static_cast<Scalar>(sizes[static_cast<std::size_t>(c)]);
      }
    }
    load_centers();
    out.trace.push_back(objective());
    out.iterations = it + 1;
  }

  // Single-point transfers: move a point when the exact objective change,
  // with both centroids updated, is negative. Escapes Lloyd fixed points.
  load_centers();
  auto sizes = out.sizes();
  for (int pass = 0; pass < max_iter; ++pass) {
    bool moved = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto a = static_cast<std::size_t>(out.labels[static_cast<std::size_t>(i)]);
      if (sizes[a] < 2) continue;
      const Scalar na = static_cast<Scalar>(sizes[a]);
      const Scalar leave = na / (na - 1) * pts.sq_dist(i, centers[a], norms[a]);
      std::size_t best = a;
      Scalar best_delta = 0;
      for (std::size_t b = 0; b < static_cast<std::size_t>(k); ++b) {
        if (b == a) continue;
        const Scalar nb = static_cast<Scalar>(sizes[b]);
        const Scalar delta = nb / (nb + 1) * pts.sq_dist(i, centers[b], norms[b]) - leave;
        if (delta < best_delta - Scalar(1e-12) * (leave + 1)) {
          best_delta = delta;
          best = b;
        }
      }
      if (best == a) continue;
      const RowVector x = pts.row(i);
      const Scalar nb = static_cast<Scalar>(sizes[best]);
      centers[a] = (centers[a] * na - x) / (na - 1);
      centers[best] = (centers[best] * nb + x) / (nb + 1);
      norms[a] = centers[a].squaredNorm();
      norms[best] = centers[best].squaredNorm();
      --sizes[a];
      ++sizes[best];
      out.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
      moved = true;
    }
    if (!moved) break;
    // Exact member means after the incremental updates.
    std::vector<RowVector> sums(static_cast<std::size_t>(k), RowVector::Zero(pts.cols()));
    for (Eigen::Index i = 0; i < n; ++i) pts.add_to(i, sums[static_cast<std::size_t>(out.labels[static_cast<std::size_t>(i)])]);
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) {
        out.centroids.row(c) = sums[static_cast<std::size_t>(c)] / static_cast<Scalar>(sizes[static_cast<std::size_t>(c)]);
      }
    }
    load_centers();
    out.trace.push_back(objective());
  }

  out.objective = objective();
  return out;
}

template <typename Rows>
ClusterAssignment<typename Rows::Scalar> kmeans_rows(const Rows& pts, const KMeansOptions& opts) {
  if (pts.rows() < 1) throw Error("kmeans: no points");
  if (opts.k < 1 || opts.k > pts.rows()) throw Error("kmeans: k must be in [1, n]");
  if (opts.max_iter < 1) throw Error("kmeans: max_iter must be >= 1");
  if (opts.restarts < 1) throw Error("kmeans: restarts must be >= 1");
  if (!pts.all_finite()) throw Error("kmeans: non-finite coordinates");
  ClusterAssignment<typename Rows::Scalar> best;
  for (int r = 0; r < opts.restarts; ++r) {
    auto run = lloyd(pts, opts.k, splitmix64(opts.seed + static_cast<std::uint64_t>(r)), opts.max_iter);
    if (r == 0 || run.objective < best.objective) best = std::move(run);
  }
  return best;
}

}  // namespace detail

/// Lloyd's algorithm from k-means++ seeds, best of `restarts` runs. Restart r
/// is seeded from (seed + r), so a single-restart run reproduces restart 0.
/// Points are rows.
template <typename Derived>
ClusterAssignment<typename Derived::Scalar> kmeans(const Eigen::MatrixBase<Derived>& points,
                                                   const KMeansOptions& opts) {
  return detail::kmeans_rows(detail::DenseRows<Derived>(points), opts);
}

template <typename Scalar, typename StorageIndex>
ClusterAssignment<Scalar> kmeans(const Eigen::SparseMatrix<Scalar, Eigen::RowMajor, StorageIndex>& points,
                                 const KMeansOptions& opts) {
  return detail::kmeans_rows(detail::SparseRows<Scalar, StorageIndex>(points), opts);
}

/// Member of `cluster` with the smallest total Euclidean distance to the
/// other members; ties go to the lowest index.
template <typename Derived>
Eigen::Index representative(const Eigen::MatrixBase<Derived>& points, const std::vector<int>& labels, int cluster) {
  using Scalar = typename Derived::Scalar;
  std::vector<Eigen::Index> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == cluster) members.push_back(static_cast<Eigen::Index>(i));
  }
  if (members.empty()) throw Error("representative: cluster " + std::to_string(cluster) + " is empty");
  Eigen::Index best = members.front();
  Scalar best_total = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index a : members) {
    Scalar total = 0;
    for (Eigen::Index b : members) total += (points.row(a) - points.row(b)).norm();
    if (total < best_total) {
      best_total = total;
      best = a;
    }
  }
  return best;
}

struct ElbowCurve {
  std::vector<int> ks;
  std::vector<double> objectives;
  std::vector<double> explained;  // 1 - objective(k) / objective(1)
  int suggested_k = 1;
  bool monotone = true;  // explained never decreased as k grew
};

/// Variance-explained curve over k in [k_min, k_max] and the k with the
/// largest drop in marginal gain (max of the negated second difference).
template <typename Derived>
ElbowCurve elbow(const Eigen::MatrixBase<Derived>& points, int k_min, int k_max, KMeansOptions opts = {}) {
  const Eigen::Index n = points.rows();
  if (k_min < 1 || k_max > n || k_min > k_max) throw Error("elbow: k range must lie within [1, n]");
  const auto mean = points.colwise().mean();
  const double total = static_cast<double>((points.rowwise() - mean).squaredNorm());
  ElbowCurve curve;
  for (int k = k_min; k <= k_max; ++k) {
    opts.k = k;
    const double obj = static_cast<double>(kmeans(points, opts).objective);
    curve.ks.push_back(k);
    curve.objectives.push_back(obj);
    curve.explained.push_back(k == 1 || total <= 0 ? 0.0 : 1.0 - obj / total);
  }
  for (std::size_t i = 1; i < curve.explained.size(); ++i) {
    if (curve.explained[i] < curve.explained[i - 1]) curve.monotone = false;
  }
  curve.suggested_k = curve.ks.front();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < curve.ks.size(); ++i) {
    const auto& e = curve.explained;
    const double drop = (e[i] - e[i - 1]) - (e[i + 1] - e[i]);
    if (drop > best) {
      best = drop;
      curve.suggested_k = curve.ks[i];
    }
  }
  return curve;
}

}  // namespace stackinsights
