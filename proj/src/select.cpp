#include "stackinsights/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stackinsights/common.hpp"

namespace stackinsights {

double mutual_information(const Eigen::MatrixXd& joint) {
  const double total = joint.sum();
  if (total <= 0) return 0.0;
  const Eigen::VectorXd row = joint.rowwise().sum();
  const Eigen::RowVectorXd col = joint.colwise().sum();
  double mi = 0.0;
  for (Eigen::Index i = 0; i < joint.rows(); ++i) {
    for (Eigen::Index j = 0; j < joint.cols(); ++j) {
      const double n = joint(i, j);
      if (n <= 0) continue;
      mi += (n / total) * std::log(n * total / (row(i) * col(j)));
    }
  }
  return std::max(0.0, mi);
}

namespace {

int bin_of(double v, double lo, double hi, int bins) {
  if (!(hi > lo)) return 0;
  const int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
  return std::clamp(b, 0, bins - 1);
}

}  // namespace

double mutual_information(std::span<const double> column, std::span<const int> labels, int bins) {
  if (column.size() != labels.size()) throw Error("mutual_information: length mismatch");
  if (column.size() < 2) throw Error("mutual_information: need at least 2 samples");
  if (bins < 1) throw Error("mutual_information: bins must be positive");
  const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(bins, 2);
  for (std::size_t i = 0; i < column.size(); ++i) {
    joint(bin_of(column[i], *lo, *hi, bins), labels[i] != 0 ? 1 : 0) += 1.0;
  }
  return mutual_information(joint);
}

std::vector<FeatureScore> rank_features(const FeatureMatrix& x, const LabelVector& y, const FeatureSpec& spec,
                                        const RankOptions& options) {
  if (x.rows() != y.size()) throw Error("rank_features: label count mismatch");
  if (static_cast<std::size_t>(x.cols()) != spec.size()) throw Error("rank_features: column count mismatch");
  if (x.rows() < 2) throw Error("rank_features: need at least 2 samples");

  // Column-major copy so each column's nonzeros are contiguous; zero entries
  // are accounted for from the per-class totals.
  const Eigen::SparseMatrix<double, Eigen::ColMajor> cols = x;
  const double positives = y.cast<double>().sum();
  const double class_totals[2] = {static_cast<double>(y.size()) - positives, positives};

  std::vector<FeatureScore> scores;
  scores.reserve(spec.size());
  std::vector<std::pair<double, int>> nz;
  for (Eigen::Index c = 0; c < cols.outerSize(); ++c) {
    const auto category = spec.category_of(static_cast<std::size_t>(c));
    const bool binary = category == FeatureCategory::Path || category == FeatureCategory::Extension;
    const int bins = binary ? 2 : options.bins;

    nz.clear();
    for (decltype(cols)::InnerIterator it(cols, c); it; ++it) nz.emplace_back(it.value(), y(it.row()));
    const bool has_zero = static_cast<Eigen::Index>(nz.size()) < x.rows();
    double lo = has_zero ? 0.0 : std::numeric_limits<double>::infinity();
    double hi = has_zero ? 0.0 : -std::numeric_limits<double>::infinity();
    for (const auto& [v, label] : nz) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(bins, 2);
    double nz_class[2] = {0, 0};
    for (const auto& [v, label] : nz) {
      joint(bin_of(v, lo, hi, bins), label) += 1.0;
      nz_class[label] += 1.0;
    }
    if (has_zero) {
      const int zb = bin_of(0.0, lo, hi, bins);
      joint(zb, 0) += class_totals[0] - nz_class[0];
      joint(zb, 1) += class_totals[1] - nz_class[1];
    }
    scores.push_back({static_cast<std::size_t>(c), spec.name_of(static_cast<std::size_t>(c)), category,
                      mutual_information(joint)});
  }
  std::stable_sort(scores.begin(), scores.end(), [](const FeatureScore& a, const FeatureScore& b) {
    if (a.mi != b.mi) return a.mi > b.mi;
    return a.index < b.index;
  });
  return scores;
}

std::vector<FeatureScore> top_k(const FeatureMatrix& x, const LabelVector& y, const FeatureSpec& spec, std::size_t k,
                                const RankOptions& options) {
  if (k > spec.size()) throw Error("top_k: k exceeds feature count");
  auto scores = rank_features(x, y, spec, options);
  scores.resize(k);
  return scores;
}

std::map<FeatureCategory, std::size_t> category_histogram(std::span<const FeatureScore> scores) {
  std::map<FeatureCategory, std::size_t> hist;
  for (const auto& s : scores) ++hist[s.category];
  return hist;
}

}  // namespace stackinsights
