#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stackinsights/features.hpp"

namespace stackinsights {

struct FeatureScore {
  std::size_t index = 0;
  std::string name;
  FeatureCategory category = FeatureCategory::Text;
  double mi = 0.0;  // nats
};

// Plug-in mutual information (nats) of a joint count table. Rows index the
// feature bins, columns the label values; zero cells contribute nothing.
double mutual_information(const Eigen::MatrixXd& joint_counts);

// Discretizes `column` into `bins` equal-width bins over its observed range
// and returns the MI with the binary labels. A constant column or constant
// labels give 0.
double mutual_information(std::span<const double> column, std::span<const int> labels, int bins);

struct RankOptions {
  int bins = 10;  // for text, size and time columns; path/extension columns use 2
};

// Scores every column, sorted by MI descending then index ascending.
std::vector<FeatureScore> rank_features(const FeatureMatrix& x, const LabelVector& y, const FeatureSpec& spec,
                                        const RankOptions& options = {});

std::vector<FeatureScore> top_k(const FeatureMatrix& x, const LabelVector& y, const FeatureSpec& spec,
                                std::size_t k, const RankOptions& options = {});

std::map<FeatureCategory, std::size_t> category_histogram(std::span<const FeatureScore> scores);

}  // namespace stackinsights
