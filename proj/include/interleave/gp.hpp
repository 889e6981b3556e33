#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace interleave {

class SurrogateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matern covariance with smoothness 5/2 at scaled distance r = |x - x'| / l.
double matern52(double r);

/// Zero-mean GP regression on standardized targets with an isotropic
/// Matern 5/2 kernel. Lengthscale and noise are picked from a grid by log
/// marginal likelihood.
class GaussianProcess {
 public:
  struct Options {
    std::vector<double> lengthscales{0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.2, 2.0};
    std::vector<double> noise_variances{1e-8, 1e-4, 1e-2, 1e-1};
  };

  GaussianProcess() = default;
  explicit GaussianProcess(Options options) : options_(std::move(options)) {}

  /// Rows of X are inputs. Throws SurrogateError on numerical failure.
  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

  struct Prediction {
    double mean;
    double variance;
  };
  /// Posterior of the latent function in the units of y.
  Prediction predict(const Eigen::VectorXd& x) const;

  double lengthscale() const { return lengthscale_; }
  double noise_variance() const { return noise_; }
  double log_marginal_likelihood() const { return lml_; }

 private:
  Options options_;
  Eigen::MatrixXd X_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
  double y_mean_ = 0.0, y_scale_ = 1.0;
  double lengthscale_ = 1.0, noise_ = 1e-8, lml_ = 0.0;
};

}  // namespace interleave
