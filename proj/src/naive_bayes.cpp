#include <cmath>

#include "stackinsights/common.hpp"
#include "stackinsights/learn.hpp"

namespace stackinsights {

NaiveBayesModel train_naive_bayes(const FeatureMatrix& x, const LabelVector& y, const Eigen::VectorXd& w,
                                  double alpha) {
  const Eigen::Index p = x.cols();
  Eigen::Matrix<double, 2, Eigen::Dynamic> counts = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, p);
  Eigen::Vector2d class_weight = Eigen::Vector2d::Zero();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int c = y(i);
    class_weight(c) += w(i);
    for (FeatureMatrix::InnerIterator it(x, i); it; ++it) {
      if (it.value() < 0) throw Error("naive Bayes needs nonnegative feature values");
      counts(c, it.col()) += w(i) * it.value();
    }
  }
  NaiveBayesModel model;
  model.log_prior = (class_weight / class_weight.sum()).array().log();
  model.log_likelihood.resize(2, p);
  for (int c = 0; c < 2; ++c) {
    const double denom = std::log(counts.row(c).sum() + alpha * static_cast<double>(p));
    model.log_likelihood.row(c) = (counts.row(c).array() + alpha).log() - denom;
  }
  return model;
}

}  // namespace stackinsights
