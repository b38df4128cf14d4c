#pragma once

#include "modeclust/rng.hpp"
#include "modeclust/types.hpp"

#include <memory>
#include <span>
#include <vector>

namespace modeclust {

/// Density value with its exact gradient and Hessian at one point.
struct ModelEval {
  double density = 0.0;
  Vector gradient;
  Matrix hessian;
};

/// Smooth density on R^d with analytic first and second derivatives.
///
/// Implementations are immutable after construction, so a model can be shared
/// read-only between worker threads.
class DensityModel {
 public:
  virtual ~DensityModel() = default;

  virtual int dim() const noexcept = 0;

  virtual double density(const Point& x) const = 0;
  virtual Vector gradient(const Point& x) const = 0;
  virtual ModelEval eval(const Point& x) const = 0;

  /// log p(x); finite wherever the density is positive in exact arithmetic,
  /// even when p(x) itself underflows.
  virtual double log_density(const Point& x) const = 0;

  /// Gradient of log p, i.e. gradient / density, computed without underflow.
  virtual Vector log_gradient(const Point& x) const = 0;
};

/// One mixture component with its precomputed factorization.
struct GaussianComponent {
  double weight = 0.0;
  Vector mean;
  Matrix covariance;

  Matrix chol_lower;  // covariance = L L^T
  Matrix precision;
  double log_norm = 0.0;  // -0.5 (d log 2pi + log det covariance)
};

/// Finite mixture of Gaussians with full covariances.
class GaussianMixture final : public DensityModel {
 public:
  /// Throws UsageError unless weights are positive and sum to one (1e-12),
  /// dimensions agree, and every covariance is symmetric positive definite.
  GaussianMixture(std::vector<double> weights, std::vector<Vector> means,
                  std::vector<Matrix> covariances);

  /// Spherical components sigma^2 I.
  static GaussianMixture spherical(std::vector<double> weights, std::vector<Vector> means,
                                   double sigma);

  int dim() const noexcept override { return dim_; }
  std::size_t num_components() const noexcept { return components_.size(); }
  const GaussianComponent& component(std::size_t j) const { return components_.at(j); }
  const std::vector<GaussianComponent>& components() const noexcept { return components_; }

  std::vector<double> weights() const;
  std::vector<Vector> means() const;
  std::vector<Matrix> covariances() const;

  /// True when every covariance equals sigma^2 I for one common sigma.
  bool is_spherical(double* sigma = nullptr) const;

  double density(const Point& x) const override;
  Vector gradient(const Point& x) const override;
  ModelEval eval(const Point& x) const override;
  double log_density(const Point& x) const override;
  Vector log_gradient(const Point& x) const override;

  /// Draws n i.i.d. points: a component by weight, then mean + L z.
  std::vector<Point> sample(std::size_t n, RngStream& rng) const;

  /// Same draw, also reporting the component each point came from.
  std::vector<Point> sample(std::size_t n, RngStream& rng, std::vector<int>& component) const;

 private:
  // Per-component log of weight * N(x; mean, cov) and the whitened residual P (x - mean).
  void component_terms(const Point& x, Vector& log_terms, Matrix& residuals) const;

  int dim_ = 0;
  std::vector<GaussianComponent> components_;
};

/// The expected kernel density estimate E[p_hat_h] of a Gaussian mixture: the
/// same mixture with every covariance widened by h^2 I.
GaussianMixture gm_smooth(const GaussianMixture& gm, double h);

/// Gaussian-kernel density estimate with full normalizer
/// (2 pi)^{-d/2} h^{-d}, so it integrates to one.
class KernelDensityEstimate final : public DensityModel {
 public:
  KernelDensityEstimate(std::span<const Point> samples, double bandwidth);

  int dim() const noexcept override { return dim_; }
  std::size_t num_samples() const noexcept { return static_cast<std::size_t>(samples_.cols()); }
  double bandwidth() const noexcept { return h_; }
  /// log of (2 pi)^{-d/2} h^{-d} / n.
  double log_normalizer() const noexcept { return log_norm_; }

  /// Samples stored column-wise (d x n).
  const Matrix& samples() const noexcept { return samples_; }
  Point sample(std::size_t i) const { return samples_.col(static_cast<Eigen::Index>(i)); }

  double density(const Point& x) const override;
  Vector gradient(const Point& x) const override;
  ModelEval eval(const Point& x) const override;
  double log_density(const Point& x) const override;
  Vector log_gradient(const Point& x) const override;

  /// Unnormalized kernel weights exp(-|x - X_i|^2 / 2h^2 + shift) with the
  /// shift chosen so the largest weight is one. Returns the shift.
  double shifted_weights(const Point& x, Vector& weights) const;

 private:
  int dim_ = 0;
  double h_ = 0.0;
  double log_norm_ = 0.0;  // log of (2 pi)^{-d/2} h^{-d} / n
  Matrix samples_;
};

/// Sup-norm gaps between two models, approximated over a probe set.
struct Discrepancy {
  double eta0 = 0.0;  // |p - q|
  double eta1 = 0.0;  // |grad p - grad q|_2
  double eta2 = 0.0;  // |hess p - hess q|, Frobenius (vec) norm
  double eta = 0.0;   // max of the three
};

Discrepancy sup_discrepancy(const DensityModel& p, const DensityModel& q,
                            std::span<const Point> probe);

/// Data points, model means, and (for d <= 2) a regular grid of
/// `grid_per_axis` points per axis on the bounding box padded by `pad`.
std::vector<Point> make_probe_set(std::span<const Point> data, std::span<const Point> means,
                                  double pad, int grid_per_axis = 100);

/// Regular grid over [lo, hi] with `per_axis` points on each axis, first axis fastest.
std::vector<Point> regular_grid(const Vector& lo, const Vector& hi, int per_axis);

/// Largest absolute eigenvalue of a symmetric matrix.
double spectral_norm_sym(const Matrix& a);

}  // namespace modeclust
