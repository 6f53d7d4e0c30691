#include "stackinsights/learn.hpp"

#include <algorithm>
#include <set>

#include "stackinsights/common.hpp"
#include "stackinsights/rng.hpp"

namespace stackinsights {

std::string_view to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::MultinomialNB: return "naive_bayes";
    case ModelFamily::LogisticRegression: return "logistic_regression";
    case ModelFamily::LinearSVM: return "linear_svm";
    case ModelFamily::RandomForest: return "random_forest";
  }
  return "random_forest";
}

ModelFamily model_family_from_string(std::string_view s) {
  if (s == "naive_bayes" || s == "nb") return ModelFamily::MultinomialNB;
  if (s == "logistic_regression" || s == "lr") return ModelFamily::LogisticRegression;
  if (s == "linear_svm" || s == "svm") return ModelFamily::LinearSVM;
  if (s == "random_forest" || s == "rf") return ModelFamily::RandomForest;
  throw ConfigError("unknown model family '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (!(C > 0)) throw ConfigError("train: C must be positive");
  if (forest.n_trees < 1) throw ConfigError("train: n_trees must be >= 1");
  if (forest.min_samples_split < 2) throw ConfigError("train: min_samples_split must be >= 2");
  if (folds < 2) throw ConfigError("train: folds must be >= 2");
  if (!(nb_alpha > 0)) throw ConfigError("train: naive Bayes alpha must be positive");
}

Eigen::VectorXd sample_weights(const LabelVector& y, ClassWeight mode) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(y.size());
  if (mode == ClassWeight::None) return w;
  const double n = static_cast<double>(y.size());
  const double pos = static_cast<double>((y.array() == 1).count());
  const double neg = n - pos;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double count = y(i) == 1 ? pos : neg;
    w(i) = n / (2.0 * count);
  }
  return w;
}

namespace {

void check_training_input(const FeatureMatrix& x, const LabelVector& y) {
  if (x.rows() != y.size()) throw Error("train: matrix has " + std::to_string(x.rows()) + " rows but " +
                                        std::to_string(y.size()) + " labels");
  if ((y.array() != 0 && y.array() != 1).any()) throw Error("train: labels must be 0 or 1");
  const auto pos = (y.array() == 1).count();
  if (pos == 0 || pos == y.size()) throw Error("train: training labels contain a single class");
}

}  // namespace

TrainedModel train(const FeatureMatrix& x, const LabelVector& y, const TrainConfig& config) {
  config.validate();
  check_training_input(x, y);
  const Eigen::VectorXd w = sample_weights(y, config.class_weight);
  TrainedModel model;
  model.family = config.family;
  model.dimension = x.cols();
  model.fingerprint = config.fingerprint;
  switch (config.family) {
    case ModelFamily::MultinomialNB:
      model.params = train_naive_bayes(x, y, w, config.nb_alpha);
      break;
    case ModelFamily::LogisticRegression:
      model.params = train_logistic(x, y, w, config.C, config.tolerance, config.max_newton_iter);
      break;
    case ModelFamily::LinearSVM:
      model.params = train_linear_svm(x, y, w, config.C, config.seed, config.svm_max_epochs);
      break;
    case ModelFamily::RandomForest:
      model.params = train_forest(x, y, w, config.forest, config.seed);
      break;
  }
  return model;
}

Prediction predict(const TrainedModel& model, const FeatureMatrix& x, std::string_view fingerprint) {
  if (fingerprint != model.fingerprint) {
    throw Error("predict: feature spec fingerprint " + std::string(fingerprint) + " does not match model's " +
                model.fingerprint);
  }
  return predict(model, x);
}

Prediction predict(const TrainedModel& model, const FeatureMatrix& x) {
  if (x.cols() != model.dimension) {
    throw Error("predict: matrix has " + std::to_string(x.cols()) + " columns, model expects " +
                std::to_string(model.dimension));
  }
  Prediction out;
  out.labels.resize(x.rows());
  out.scores.resize(x.rows());
  if (const auto* nb = std::get_if<NaiveBayesModel>(&model.params)) {
    const Eigen::MatrixXd jll = (x * nb->log_likelihood.transpose()).rowwise() + nb->log_prior.transpose();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double diff = jll(i, 0) - jll(i, 1);
      out.scores(i) = 1.0 / (1.0 + std::exp(diff));
      out.labels(i) = jll(i, 1) >= jll(i, 0) ? 1 : 0;
    }
  } else if (const auto* lin = std::get_if<LinearModel>(&model.params)) {
    const Eigen::VectorXd z = (x * lin->weights).array() + lin->bias;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      out.scores(i) = model.family == ModelFamily::LogisticRegression ? 1.0 / (1.0 + std::exp(-z(i))) : z(i);
      out.labels(i) = z(i) >= 0 ? 1 : 0;
    }
  } else {
    const auto& forest = std::get<ForestModel>(model.params);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      std::size_t votes = 0;
      for (const auto& tree : forest.trees) votes += tree.votes_sensitive(x, i) ? 1 : 0;
      out.scores(i) = static_cast<double>(votes) / static_cast<double>(forest.trees.size());
      out.labels(i) = 2 * votes >= forest.trees.size() ? 1 : 0;
    }
  }
  return out;
}

Metrics Metrics::from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  Metrics m{tp, fp, fn, tn};
  const auto ratio = [](double a, double b) { return b > 0 ? a / b : 0.0; };
  const double total = static_cast<double>(tp + fp + fn + tn);
  m.accuracy = ratio(static_cast<double>(tp + tn), total);
  m.precision = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
  m.recall = ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
  m.f1 = ratio(2 * m.precision * m.recall, m.precision + m.recall);
  return m;
}

Metrics evaluate(const LabelVector& predicted, const LabelVector& truth) {
  if (predicted.size() != truth.size()) throw Error("evaluate: length mismatch");
  if (truth.size() == 0) throw Error("evaluate: empty input");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    const bool p = predicted(i) == 1, t = truth(i) == 1;
    if (p && t) ++tp;
    else if (p) ++fp;
    else if (t) ++fn;
    else ++tn;
  }
  return Metrics::from_counts(tp, fp, fn, tn);
}

std::vector<int> stratified_folds(const LabelVector& y, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error("cross validation needs at least 2 folds");
  std::vector<int> fold(static_cast<std::size_t>(y.size()), -1);
  Rng rng(seed);
  std::size_t offset = 0;
  for (int cls : {0, 1}) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y(i) == cls) idx.push_back(i);
    }
    if (idx.size() < static_cast<std::size_t>(folds)) {
      throw Error("cross validation infeasible: class " + std::to_string(cls) + " has " +
                  std::to_string(idx.size()) + " samples for " + std::to_string(folds) + " folds");
    }
    rng.shuffle(std::span<Eigen::Index>(idx));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      fold[static_cast<std::size_t>(idx[k])] = static_cast<int>((offset + k) % static_cast<std::size_t>(folds));
    }
    offset += idx.size();
  }
  return fold;
}

FeatureMatrix select_rows(const FeatureMatrix& x, std::span<const Eigen::Index> rows) {
  FeatureMatrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  Eigen::VectorXi nnz(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) nnz(static_cast<Eigen::Index>(r)) = static_cast<int>(x.row(rows[r]).nonZeros());
  out.reserve(nnz);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (FeatureMatrix::InnerIterator it(x, rows[r]); it; ++it) {
      out.insert(static_cast<Eigen::Index>(r), it.col()) = it.value();
    }
  }
  out.makeCompressed();
  return out;
}

CrossValidation cross_validate(const FeatureMatrix& x, const LabelVector& y, const TrainConfig& config) {
  config.validate();
  if (x.rows() != y.size()) throw Error("cross_validate: label count mismatch");
  const auto fold = stratified_folds(y, config.folds, config.seed);
  CrossValidation cv;
  double acc = 0, prec = 0, rec = 0, f1 = 0;
  for (int f = 0; f < config.folds; ++f) {
    std::vector<Eigen::Index> train_rows, test_rows;
    for (std::size_t i = 0; i < fold.size(); ++i) {
      (fold[i] == f ? test_rows : train_rows).push_back(static_cast<Eigen::Index>(i));
    }
    LabelVector y_train(static_cast<Eigen::Index>(train_rows.size())), y_test(static_cast<Eigen::Index>(test_rows.size()));
    for (std::size_t i = 0; i < train_rows.size(); ++i) y_train(static_cast<Eigen::Index>(i)) = y(train_rows[i]);
    for (std::size_t i = 0; i < test_rows.size(); ++i) y_test(static_cast<Eigen::Index>(i)) = y(test_rows[i]);
    TrainConfig fold_config = config;
    fold_config.fingerprint.clear();
    const auto model = train(select_rows(x, train_rows), y_train, fold_config);
    const auto m = evaluate(predict(model, select_rows(x, test_rows)).labels, y_test);
    cv.folds.push_back(m);
    cv.mean.tp += m.tp;
    cv.mean.fp += m.fp;
    cv.mean.fn += m.fn;
    cv.mean.tn += m.tn;
    acc += m.accuracy;
    prec += m.precision;
    rec += m.recall;
    f1 += m.f1;
  }
  const double k = static_cast<double>(config.folds);
  cv.mean.accuracy = acc / k;
  cv.mean.precision = prec / k;
  cv.mean.recall = rec / k;
  cv.mean.f1 = f1 / k;
  return cv;
}

GridSearchResult grid_search(const FeatureMatrix& x, const LabelVector& y, TrainConfig config,
                             std::span<const double> grid) {
  const std::set<double> values(grid.begin(), grid.end());
  if (values.empty()) throw ConfigError("grid_search: empty grid");
  GridSearchResult result;
  double best_acc = -1;
  for (double c : values) {
    config.C = c;
    auto cv = cross_validate(x, y, config);
    if (cv.mean.accuracy > best_acc) {
      best_acc = cv.mean.accuracy;
      result.best_C = c;
    }
    result.table.emplace_back(c, std::move(cv));
  }
  return result;
}

namespace {

constexpr int kModelVersion = 1;

}  // namespace

nlohmann::json to_json(const TrainedModel& model) {
  nlohmann::json params;
  if (const auto* nb = std::get_if<NaiveBayesModel>(&model.params)) {
    std::vector<double> neg(nb->log_likelihood.row(0).begin(), nb->log_likelihood.row(0).end());
    std::vector<double> pos(nb->log_likelihood.row(1).begin(), nb->log_likelihood.row(1).end());
    params = {{"log_prior", {nb->log_prior(0), nb->log_prior(1)}}, {"log_likelihood", {neg, pos}}};
  } else if (const auto* lin = std::get_if<LinearModel>(&model.params)) {
    params = {{"weights", std::vector<double>(lin->weights.begin(), lin->weights.end())}, {"bias", lin->bias}};
  } else {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : std::get<ForestModel>(model.params).trees) {
      std::vector<int> feature, left, right;
      std::vector<double> threshold, fraction;
      for (const auto& n : t.nodes) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        fraction.push_back(n.sensitive_fraction);
      }
      trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right},
                       {"sensitive_fraction", fraction}});
    }
    params = {{"trees", trees}};
  }
  return nlohmann::json{{"version", kModelVersion},
                        {"family", std::string(to_string(model.family))},
                        {"dimension", model.dimension},
                        {"fingerprint", model.fingerprint},
                        {"params", params}};
}

TrainedModel model_from_json(const nlohmann::json& j) {
  if (j.value("version", 0) != kModelVersion) throw Error("model: unsupported version");
  TrainedModel model;
  model.family = model_family_from_string(j.at("family").get<std::string>());
  model.dimension = j.at("dimension").get<Eigen::Index>();
  model.fingerprint = j.at("fingerprint").get<std::string>();
  const auto& p = j.at("params");
  const auto dim = static_cast<std::size_t>(model.dimension);
  switch (model.family) {
    case ModelFamily::MultinomialNB: {
      NaiveBayesModel nb;
      const auto prior = p.at("log_prior").get<std::vector<double>>();
      const auto ll = p.at("log_likelihood").get<std::vector<std::vector<double>>>();
      if (prior.size() != 2 || ll.size() != 2 || ll[0].size() != dim || ll[1].size() != dim) {
        throw Error("model: naive Bayes parameter dimensions do not match");
      }
      nb.log_prior << prior[0], prior[1];
      nb.log_likelihood.resize(2, model.dimension);
      for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t k = 0; k < dim; ++k) nb.log_likelihood(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = ll[c][k];
      }
      model.params = std::move(nb);
      break;
    }
    case ModelFamily::LogisticRegression:
    case ModelFamily::LinearSVM: {
      LinearModel lin;
      const auto w = p.at("weights").get<std::vector<double>>();
      if (w.size() != dim) throw Error("model: weight vector length does not match dimension");
      lin.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
      lin.bias = p.at("bias").get<double>();
      model.params = std::move(lin);
      break;
    }
    case ModelFamily::RandomForest: {
      ForestModel forest;
      for (const auto& t : p.at("trees")) {
        const auto feature = t.at("feature").get<std::vector<int>>();
        const auto threshold = t.at("threshold").get<std::vector<double>>();
        const auto left = t.at("left").get<std::vector<int>>();
        const auto right = t.at("right").get<std::vector<int>>();
        const auto fraction = t.at("sensitive_fraction").get<std::vector<double>>();
        const auto n = feature.size();
        if (threshold.size() != n || left.size() != n || right.size() != n || fraction.size() != n || n == 0) {
          throw Error("model: malformed tree");
        }
        DecisionTree tree;
        for (std::size_t k = 0; k < n; ++k) {
          if (feature[k] >= model.dimension ||
              (feature[k] >= 0 && (left[k] <= 0 || right[k] <= 0 || static_cast<std::size_t>(left[k]) >= n ||
                                   static_cast<std::size_t>(right[k]) >= n))) {
            throw Error("model: malformed tree node");
          }
          tree.nodes.push_back({feature[k], threshold[k], left[k], right[k], fraction[k]});
        }
        forest.trees.push_back(std::move(tree));
      }
      if (forest.trees.empty()) throw Error("model: forest has no trees");
      model.params = std::move(forest);
      break;
    }
  }
  return model;
}

}  // namespace stackinsights
