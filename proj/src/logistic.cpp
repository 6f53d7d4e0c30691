#include <cmath>

#include "stackinsights/learn.hpp"

namespace stackinsights {

namespace {

// log(1 + exp(-m)) without overflow.
double log1p_exp_neg(double m) { return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m)); }

// 1 / (1 + exp(m)).
double sigmoid_neg(double m) {
  if (m >= 0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

Eigen::VectorXd signed_labels(const LabelVector& y) { return (2 * y.array() - 1).cast<double>(); }

struct Problem {
  const FeatureMatrix& x;
  Eigen::VectorXd ys;  // +-1
  const Eigen::VectorXd& s;
  double C;

  Eigen::VectorXd margins(const Eigen::VectorXd& theta) const {
    const Eigen::Index p = x.cols();
    Eigen::VectorXd z = x * theta.head(p);
    z.array() += theta(p);
    return ys.cwiseProduct(z);
  }

  double objective(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd m = margins(theta);
    double loss = 0;
    for (Eigen::Index i = 0; i < m.size(); ++i) loss += s(i) * log1p_exp_neg(m(i));
    return 0.5 * theta.head(x.cols()).squaredNorm() + C * loss;
  }

  // Gradient; also fills the Hessian diagonal factor D for Hessian-vector products.
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta, Eigen::VectorXd* curvature = nullptr) const {
    const Eigen::Index p = x.cols();
    const Eigen::VectorXd m = margins(theta);
    Eigen::VectorXd r(m.size());
    if (curvature) curvature->resize(m.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double sn = sigmoid_neg(m(i));
      r(i) = -C * s(i) * ys(i) * sn;
      if (curvature) (*curvature)(i) = C * s(i) * sn * (1.0 - sn);
    }
    Eigen::VectorXd g(p + 1);
    g.head(p) = theta.head(p) + x.transpose() * r;
    g(p) = r.sum();
    return g;
  }

  Eigen::VectorXd hessian_times(const Eigen::VectorXd& curvature, const Eigen::VectorXd& v) const {
    const Eigen::Index p = x.cols();
    Eigen::VectorXd u = x * v.head(p);
    u.array() += v(p);
    u.array() *= curvature.array();
    Eigen::VectorXd out(p + 1);
    out.head(p) = v.head(p) + x.transpose() * u;
    out(p) = u.sum();
    return out;
  }
};

LinearModel unpack(const Eigen::VectorXd& theta) {
  const Eigen::Index p = theta.size() - 1;
  return {theta.head(p), theta(p)};
}

Eigen::VectorXd pack(const LinearModel& m) {
  Eigen::VectorXd theta(m.weights.size() + 1);
  theta << m.weights, m.bias;
  return theta;
}

}  // namespace

double logistic_objective(const LinearModel& m, const FeatureMatrix& x, const LabelVector& y,
                          const Eigen::VectorXd& weights, double C) {
  return Problem{x, signed_labels(y), weights, C}.objective(pack(m));
}

Eigen::VectorXd logistic_gradient(const LinearModel& m, const FeatureMatrix& x, const LabelVector& y,
                                  const Eigen::VectorXd& weights, double C) {
  return Problem{x, signed_labels(y), weights, C}.gradient(pack(m));
}

// Truncated Newton: conjugate gradient on the Hessian system, Armijo backtracking.
LinearModel train_logistic(const FeatureMatrix& x, const LabelVector& y, const Eigen::VectorXd& w, double C,
                           double tolerance, int max_iter) {
  const Problem prob{x, signed_labels(y), w, C};
  const Eigen::Index dim = x.cols() + 1;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  double f = prob.objective(theta);
  Eigen::VectorXd curvature;
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd g = prob.gradient(theta, &curvature);
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    if (gnorm <= tolerance) break;

    const double eta = std::min(0.5, std::sqrt(g.norm()));
    const double cg_tol = eta * g.norm();
    Eigen::VectorXd d = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd r = -g;
    Eigen::VectorXd q = r;
    double rr = r.squaredNorm();
    const int cg_max = static_cast<int>(std::min<Eigen::Index>(2 * dim, 1000));
    for (int k = 0; k < cg_max && std::sqrt(rr) > cg_tol; ++k) {
      const Eigen::VectorXd hq = prob.hessian_times(curvature, q);
      const double qhq = q.dot(hq);
      if (qhq <= 0) break;
      const double a = rr / qhq;
      d += a * q;
      r -= a * hq;
      const double rr_next = r.squaredNorm();
      q = r + (rr_next / rr) * q;
      rr = rr_next;
    }
    if (d.isZero(0)) d = -g;

    const double slope = g.dot(d);
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::VectorXd candidate = theta + step * d;
      const double fc = prob.objective(candidate);
      if (fc <= f + 1e-4 * step * slope) {
        theta = candidate;
        f = fc;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return unpack(theta);
}

}  // namespace stackinsights
