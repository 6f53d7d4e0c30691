#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "stackinsights/features.hpp"

namespace stackinsights {

enum class ModelFamily { MultinomialNB, LogisticRegression, LinearSVM, RandomForest };
enum class ClassWeight { None, Balanced };

std::string_view to_string(ModelFamily f);
ModelFamily model_family_from_string(std::string_view s);

struct ForestOptions {
  int n_trees = 10;
  int max_depth = 0;  // 0 = unbounded
  bool bootstrap = true;
  bool sqrt_features = true;  // false: every feature is a split candidate
  int min_samples_split = 2;
};

struct TrainConfig {
  ModelFamily family = ModelFamily::RandomForest;
  double C = 1.0;
  ClassWeight class_weight = ClassWeight::None;
  ForestOptions forest;
  std::uint64_t seed = 42;
  int folds = 10;
  double nb_alpha = 1.0;
  double tolerance = 1e-6;   // logistic regression: gradient infinity norm
  int max_newton_iter = 200;
  int svm_max_epochs = 1000;
  std::string fingerprint;  // of the FeatureSpec the matrix was encoded with

  void validate() const;
};

struct NaiveBayesModel {
  Eigen::Vector2d log_prior;            // [non-sensitive, sensitive]
  Eigen::Matrix<double, 2, Eigen::Dynamic> log_likelihood;
};

struct LinearModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when value <= threshold
  int left = -1;
  int right = -1;
  double sensitive_fraction = 0.0;  // weighted, at this node
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  // Leaf votes sensitive when its weighted sensitive fraction is >= 0.5.
  bool votes_sensitive(const FeatureMatrix& x, Eigen::Index row) const;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
};

struct TrainedModel {
  ModelFamily family = ModelFamily::RandomForest;
  Eigen::Index dimension = 0;
  std::string fingerprint;
  std::variant<NaiveBayesModel, LinearModel, ForestModel> params;
};

struct Prediction {
  LabelVector labels;
  // Sensitive-class score: probability (NB, LR), margin (SVM) or vote fraction (RF).
  Eigen::VectorXd scores;
};

// Per-sample weights; balanced mode gives class c the weight n / (2 * n_c).
Eigen::VectorXd sample_weights(const LabelVector& y, ClassWeight mode);

TrainedModel train(const FeatureMatrix& x, const LabelVector& y, const TrainConfig& config);

// Throws if the fingerprint differs from the model's or the width differs.
Prediction predict(const TrainedModel& model, const FeatureMatrix& x, std::string_view fingerprint);
Prediction predict(const TrainedModel& model, const FeatureMatrix& x);

NaiveBayesModel train_naive_bayes(const FeatureMatrix& x, const LabelVector& y, const Eigen::VectorXd& w, double alpha);
LinearModel train_logistic(const FeatureMatrix& x, const LabelVector& y, const Eigen::VectorXd& w, double C,
                           double tolerance, int max_iter);
LinearModel train_linear_svm(const FeatureMatrix& x, const LabelVector& y, const Eigen::VectorXd& w, double C,
                             std::uint64_t seed, int max_epochs);
ForestModel train_forest(const FeatureMatrix& x, const LabelVector& y, const Eigen::VectorXd& w,
                         const ForestOptions& options, std::uint64_t seed);

// Regularized logistic loss 0.5*|w|^2 + C * sum_i w_i * log(1 + exp(-y_i (x_i.w + b)))
// with y in {-1, +1}, and its gradient over (w, b).
double logistic_objective(const LinearModel& m, const FeatureMatrix& x, const LabelVector& y,
                          const Eigen::VectorXd& weights, double C);
Eigen::VectorXd logistic_gradient(const LinearModel& m, const FeatureMatrix& x, const LabelVector& y,
                                  const Eigen::VectorXd& weights, double C);

struct Metrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;

  static Metrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
};

// Positive class is sensitive (1). Zero denominators give 0.
Metrics evaluate(const LabelVector& predicted, const LabelVector& truth);

// Fold id per sample: each class is shuffled with the seed and dealt round-robin.
std::vector<int> stratified_folds(const LabelVector& y, int folds, std::uint64_t seed);

struct CrossValidation {
  Metrics mean;  // unweighted mean of fold metrics; counts are summed
  std::vector<Metrics> folds;
};

CrossValidation cross_validate(const FeatureMatrix& x, const LabelVector& y, const TrainConfig& config);

struct GridSearchResult {
  double best_C = 0;
  std::vector<std::pair<double, CrossValidation>> table;  // ascending C
};

// Best C by mean CV accuracy; ties go to the smaller C.
GridSearchResult grid_search(const FeatureMatrix& x, const LabelVector& y, TrainConfig config,
                             std::span<const double> grid);

nlohmann::json to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

FeatureMatrix select_rows(const FeatureMatrix& x, std::span<const Eigen::Index> rows);

}  // namespace stackinsights
