#include <algorithm>
#include <cmath>
#include <numeric>

#include "stackinsights/learn.hpp"
#include "stackinsights/rng.hpp"

namespace stackinsights {

namespace {

// Value of column `col` in CSR row `row`; zero when absent.
double value_at(const FeatureMatrix& x, Eigen::Index row, int col) {
  const auto* outer = x.outerIndexPtr();
  const auto* inner = x.innerIndexPtr();
  const auto* begin = inner + outer[row];
  const auto* end = inner + (x.isCompressed() ? outer[row + 1] : outer[row] + x.innerNonZeroPtr()[row]);
  const auto* hit = std::lower_bound(begin, end, col);
  if (hit == end || *hit != col) return 0.0;
  return x.valuePtr()[hit - inner];
}

struct Split {
  int feature = -1;
  double threshold = 0;
  double score = -1;  // sum over children of sum_c W_c^2 / W; larger is purer
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, const LabelVector& y, std::vector<double> weight, const ForestOptions& opt,
              Rng& rng)
      : x_(x), y_(y), weight_(std::move(weight)), opt_(opt), rng_(rng), stamp_(static_cast<std::size_t>(x.cols()), -1) {
    const auto p = static_cast<double>(x.cols());
    mtry_ = opt.sqrt_features ? std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(p))))
                              : static_cast<std::size_t>(x.cols());
  }

  DecisionTree build() {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < weight_.size(); ++i) {
      if (weight_[i] > 0) rows.push_back(static_cast<Eigen::Index>(i));
    }
    DecisionTree tree;
    grow(tree, std::move(rows), 0);
    return tree;
  }

 private:
  int grow(DecisionTree& tree, std::vector<Eigen::Index> rows, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    double w0 = 0, w1 = 0;
    for (const auto r : rows) (y_(r) == 1 ? w1 : w0) += weight_[static_cast<std::size_t>(r)];
    tree.nodes[static_cast<std::size_t>(id)].sensitive_fraction = w1 / (w0 + w1);
    const bool pure = w0 == 0 || w1 == 0;
    const bool depth_capped = opt_.max_depth > 0 && depth >= opt_.max_depth;
    if (pure || depth_capped || rows.size() < static_cast<std::size_t>(opt_.min_samples_split)) return id;

    const Split split = best_split(rows, id, w0, w1);
    if (split.feature < 0) return id;

    std::vector<Eigen::Index> left, right;
    for (const auto r : rows) (value_at(x_, r, split.feature) <= split.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(tree, std::move(left), depth + 1);
    const int r = grow(tree, std::move(right), depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  // Features that are nonzero somewhere in the node are the only ones that can
  // vary; mtry of them are drawn in random order, skipping constant ones.
  Split best_split(const std::vector<Eigen::Index>& rows, int node_id, double w0, double w1) {
    std::vector<int> candidates;
    if (mtry_ == static_cast<std::size_t>(x_.cols())) {
      candidates.resize(static_cast<std::size_t>(x_.cols()));
      std::iota(candidates.begin(), candidates.end(), 0);
    } else {
      for (const auto r : rows) {
        for (FeatureMatrix::InnerIterator it(x_, r); it; ++it) {
          auto& s = stamp_[static_cast<std::size_t>(it.col())];
          if (s != node_id) {
            s = node_id;
            candidates.push_back(static_cast<int>(it.col()));
          }
        }
      }
      std::sort(candidates.begin(), candidates.end());
    }
    Split best;
    std::size_t informative = 0;
    for (std::size_t k = 0; k < candidates.size() && informative < mtry_; ++k) {
      std::swap(candidates[k], candidates[k + rng_.below(candidates.size() - k)]);
      const int feature = candidates[k];
      Split s;
      if (!evaluate(rows, feature, w0, w1, s)) continue;
      ++informative;
      if (s.score > best.score) best = s;
    }
    return best;
  }

  // False when the feature is constant over the node.
  bool evaluate(const std::vector<Eigen::Index>& rows, int feature, double w0, double w1, Split& out) {
    values_.clear();
    for (const auto r : rows) values_.emplace_back(value_at(x_, r, feature), r);
    std::sort(values_.begin(), values_.end());
    if (values_.front().first == values_.back().first) return false;
    double l0 = 0, l1 = 0;
    for (std::size_t k = 0; k + 1 < values_.size(); ++k) {
      const auto r = static_cast<std::size_t>(values_[k].second);
      (y_(values_[k].second) == 1 ? l1 : l0) += weight_[r];
      const double v = values_[k].first, next = values_[k + 1].first;
      if (v == next) continue;
      const double r0 = w0 - l0, r1 = w1 - l1;
      const double score = (l0 * l0 + l1 * l1) / (l0 + l1) + (r0 * r0 + r1 * r1) / (r0 + r1);
      if (score > out.score) {
        double mid = v + (next - v) / 2;
        if (mid >= next) mid = v;
        out = {feature, mid, score};
      }
    }
    return true;
  }

  const FeatureMatrix& x_;
  const LabelVector& y_;
  std::vector<double> weight_;
  const ForestOptions& opt_;
  Rng& rng_;
  std::size_t mtry_ = 1;
  std::vector<int> stamp_;
  std::vector<std::pair<double, Eigen::Index>> values_;
};

}  // namespace

bool DecisionTree::votes_sensitive(const FeatureMatrix& x, Eigen::Index row) const {
  std::size_t k = 0;
  while (nodes[k].feature >= 0) {
    const auto& n = nodes[k];
    k = static_cast<std::size_t>(value_at(x, row, n.feature) <= n.threshold ? n.left : n.right);
  }
  return nodes[k].sensitive_fraction >= 0.5;
}

ForestModel train_forest(const FeatureMatrix& x, const LabelVector& y, const Eigen::VectorXd& w,
                         const ForestOptions& options, std::uint64_t seed) {
  ForestModel forest;
  const auto n = static_cast<std::size_t>(x.rows());
  for (int t = 0; t < options.n_trees; ++t) {
    Rng rng(splitmix64(seed + static_cast<std::uint64_t>(t)));
    std::vector<double> weight(n, 0.0);
    if (options.bootstrap) {
      for (std::size_t k = 0; k < n; ++k) weight[rng.below(n)] += 1.0;
    } else {
      std::fill(weight.begin(), weight.end(), 1.0);
    }
    for (std::size_t i = 0; i < n; ++i) weight[i] *= w(static_cast<Eigen::Index>(i));
    forest.trees.push_back(TreeBuilder(x, y, std::move(weight), options, rng).build());
  }
  return forest;
}

}  // namespace stackinsights
