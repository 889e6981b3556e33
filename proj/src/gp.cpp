#include "interleave/gp.hpp"

#include <cmath>
#include <limits>

namespace interleave {

double matern52(double r) {
  const double a = std::sqrt(5.0) * r;
  return (1.0 + a + a * a / 3.0) * std::exp(-a);
}

namespace {

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, double lengthscale) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      K(i, j) = K(j, i) = matern52((X.row(i) - X.row(j)).norm() / lengthscale);
    }
  }
  return K;
}

}  // namespace

void GaussianProcess::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() == 0 || X.rows() != y.size()) throw SurrogateError("GP needs matching, non-empty inputs and targets");
  if (!X.allFinite() || !y.allFinite()) throw SurrogateError("GP inputs must be finite");

  X_ = X;
  y_mean_ = y.mean();
  const double var = (y.array() - y_mean_).square().mean();
  y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
  const Eigen::VectorXd z = (y.array() - y_mean_) / y_scale_;
  const double n = static_cast<double>(X.rows());

  double best = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (double l : options_.lengthscales) {
    const Eigen::MatrixXd K = kernel_matrix(X, l);
    for (double noise : options_.noise_variances) {
      // Escalating jitter rescues nearly singular kernels.
      for (double jitter : {0.0, 1e-10, 1e-8, 1e-6}) {
        Eigen::MatrixXd Kn = K;
        Kn.diagonal().array() += noise + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(Kn);
        if (llt.info() != Eigen::Success) continue;
        const Eigen::VectorXd a = llt.solve(z);
        const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        const double lml = -0.5 * z.dot(a) - 0.5 * logdet - 0.5 * n * std::log(2.0 * M_PI);
        if (std::isfinite(lml) && lml > best) {
          best = lml;
          lengthscale_ = l;
          noise_ = noise + jitter;
          chol_ = llt;
          alpha_ = a;
          found = true;
        }
        break;
      }
    }
  }
  if (!found) throw SurrogateError("GP kernel matrix is not positive definite for any hyperparameter");
  lml_ = best;
}

GaussianProcess::Prediction GaussianProcess::predict(const Eigen::VectorXd& x) const {
  if (X_.rows() == 0) throw SurrogateError("GP used before fit");
  Eigen::VectorXd k(X_.rows());
  for (Eigen::Index i = 0; i < X_.rows(); ++i) k(i) = matern52((X_.row(i).transpose() - x).norm() / lengthscale_);
  const double mean = k.dot(alpha_);
  const Eigen::VectorXd v = chol_.matrixL().solve(k);
  const double var = std::max(0.0, 1.0 - v.squaredNorm());
  return {y_mean_ + y_scale_ * mean, y_scale_ * y_scale_ * var};
}

}  // namespace interleave
