#include "modeclust/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace modeclust {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

// Eigen's vectorized exp clamps large negative arguments to a tiny positive
// value instead of underflowing to zero; redo those entries with std::exp.
Eigen::ArrayXd exp_exact(const Eigen::ArrayXd& a) {
  Eigen::ArrayXd e = a.exp();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < -700.0) e[i] = std::exp(a[i]);
  }
  return e;
}

double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log(exp_exact(v.array() - m).sum());
}

}  // namespace

// ---------------------------------------------------------------------------
// GaussianMixture
// ---------------------------------------------------------------------------

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<Vector> means,
                                 std::vector<Matrix> covariances) {
  const std::size_t k = weights.size();
  require(k >= 1, "GaussianMixture: at least one component required");
  require(means.size() == k && covariances.size() == k,
          "GaussianMixture: weights, means and covariances must have equal length");
  dim_ = static_cast<int>(means.front().size());
  require(dim_ >= 1, "GaussianMixture: dimension must be at least 1");

  double total = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w > 0.0, "GaussianMixture: weights must be strictly positive");
    total += w;
  }
  require(std::abs(total - 1.0) <= 1e-12, "GaussianMixture: weights must sum to 1");

  components_.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    const Vector& mu = means[j];
    const Matrix& cov = covariances[j];
    require(mu.size() == dim_, "GaussianMixture: means must share one dimension");
    require(mu.allFinite(), "GaussianMixture: non-finite mean");
    require(cov.rows() == dim_ && cov.cols() == dim_,
            "GaussianMixture: covariance shape does not match dimension");
    require(cov.allFinite(), "GaussianMixture: non-finite covariance");
    require((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-12,
            "GaussianMixture: covariance is not symmetric");

    GaussianComponent c;
    c.weight = weights[j];
    c.mean = mu;
    c.covariance = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(c.covariance, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() > 0.0,
            "GaussianMixture: covariance is not positive definite");
    Eigen::LLT<Matrix> llt(c.covariance);
    require(llt.info() == Eigen::Success, "GaussianMixture: Cholesky factorization failed");
    c.chol_lower = llt.matrixL();
    c.precision = llt.solve(Matrix::Identity(dim_, dim_));
    c.precision = 0.5 * (c.precision + c.precision.transpose());
    const double log_det = 2.0 * c.chol_lower.diagonal().array().log().sum();
    c.log_norm = -0.5 * (dim_ * kLog2Pi + log_det);
    components_.push_back(std::move(c));
  }
}

GaussianMixture GaussianMixture::spherical(std::vector<double> weights, std::vector<Vector> means,
                                           double sigma) {
  require(std::isfinite(sigma) && sigma > 0.0, "GaussianMixture: sigma must be positive");
  require(!means.empty(), "GaussianMixture: at least one component required");
  const auto d = means.front().size();
  std::vector<Matrix> covs(means.size(), sigma * sigma * Matrix::Identity(d, d));
  return GaussianMixture(std::move(weights), std::move(means), std::move(covs));
}

std::vector<double> GaussianMixture::weights() const {
  std::vector<double> w;
  for (const auto& c : components_) w.push_back(c.weight);
  return w;
}

std::vector<Vector> GaussianMixture::means() const {
  std::vector<Vector> m;
  for (const auto& c : components_) m.push_back(c.mean);
  return m;
}

std::vector<Matrix> GaussianMixture::covariances() const {
  std::vector<Matrix> m;
  for (const auto& c : components_) m.push_back(c.covariance);
  return m;
}

bool GaussianMixture::is_spherical(double* sigma) const {
  const double s2 = components_.front().covariance(0, 0);
  const Matrix target = s2 * Matrix::Identity(dim_, dim_);
  for (const auto& c : components_) {
    if ((c.covariance - target).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, s2)) return false;
  }
  if (sigma) *sigma = std::sqrt(s2);
  return true;
}

void GaussianMixture::component_terms(const Point& x, Vector& log_terms, Matrix& residuals) const {
  const auto k = static_cast<Eigen::Index>(components_.size());
  log_terms.resize(k);
  residuals.resize(dim_, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& c = components_[static_cast<std::size_t>(j)];
    const Vector diff = x - c.mean;
    residuals.col(j).noalias() = c.precision * diff;
    const double q = diff.dot(residuals.col(j));
    log_terms[j] = std::log(c.weight) + c.log_norm - 0.5 * q;
  }
}

double GaussianMixture::density(const Point& x) const {
  require_point(x, dim_, "GaussianMixture::density");
  Vector lt;
  Matrix res;
  component_terms(x, lt, res);
  return exp_exact(lt.array()).sum();
}

Vector GaussianMixture::gradient(const Point& x) const {
  require_point(x, dim_, "GaussianMixture::gradient");
  Vector lt;
  Matrix res;
  component_terms(x, lt, res);
  return -(res * exp_exact(lt.array()).matrix());
}

ModelEval GaussianMixture::eval(const Point& x) const {
  require_point(x, dim_, "GaussianMixture::eval");
  Vector lt;
  Matrix res;
  component_terms(x, lt, res);
  ModelEval out;
  out.gradient = Vector::Zero(dim_);
  out.hessian = Matrix::Zero(dim_, dim_);
  for (Eigen::Index j = 0; j < lt.size(); ++j) {
    const double phi = std::exp(lt[j]);
    out.density += phi;
    out.gradient.noalias() -= phi * res.col(j);
    out.hessian.noalias() += phi * (res.col(j) * res.col(j).transpose());
    out.hessian.noalias() -= phi * components_[static_cast<std::size_t>(j)].precision;
  }
  return out;
}

double GaussianMixture::log_density(const Point& x) const {
  require_point(x, dim_, "GaussianMixture::log_density");
  Vector lt;
  Matrix res;
  component_terms(x, lt, res);
  return log_sum_exp(lt);
}

Vector GaussianMixture::log_gradient(const Point& x) const {
  require_point(x, dim_, "GaussianMixture::log_gradient");
  Vector lt;
  Matrix res;
  component_terms(x, lt, res);
  const Vector w = exp_exact(lt.array() - lt.maxCoeff()).matrix();
  return -(res * w) / w.sum();
}

std::vector<Point> GaussianMixture::sample(std::size_t n, RngStream& rng) const {
  std::vector<int> ignored;
  return sample(n, rng, ignored);
}

std::vector<Point> GaussianMixture::sample(std::size_t n, RngStream& rng,
                                           std::vector<int>& component) const {
  require(n >= 1, "GaussianMixture::sample: n must be at least 1");
  std::vector<double> cumulative(components_.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < components_.size(); ++j) {
    acc += components_[j].weight;
    cumulative[j] = acc;
  }
  std::vector<Point> out;
  out.reserve(n);
  component.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t j =
        std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), components_.size() - 1);
    component[i] = static_cast<int>(j);
    const Vector z = rng.normal_vector(dim_);
    out.push_back(components_[j].mean + components_[j].chol_lower * z);
  }
  return out;
}

GaussianMixture gm_smooth(const GaussianMixture& gm, double h) {
  require(std::isfinite(h) && h >= 0.0, "gm_smooth: bandwidth must be non-negative");
  std::vector<Matrix> covs = gm.covariances();
  const int d = gm.dim();
  for (auto& c : covs) c += h * h * Matrix::Identity(d, d);
  return GaussianMixture(gm.weights(), gm.means(), std::move(covs));
}

// ---------------------------------------------------------------------------
// KernelDensityEstimate
// ---------------------------------------------------------------------------

KernelDensityEstimate::KernelDensityEstimate(std::span<const Point> samples, double bandwidth) {
  require(!samples.empty(), "KernelDensityEstimate: at least one sample required");
  require(std::isfinite(bandwidth) && bandwidth > 0.0,
          "KernelDensityEstimate: bandwidth must be positive");
  dim_ = static_cast<int>(samples.front().size());
  require(dim_ >= 1, "KernelDensityEstimate: dimension must be at least 1");
  h_ = bandwidth;
  samples_.resize(dim_, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require_point(samples[i], dim_, "KernelDensityEstimate");
    samples_.col(static_cast<Eigen::Index>(i)) = samples[i];
  }
  log_norm_ = -0.5 * dim_ * kLog2Pi - dim_ * std::log(h_) -
              std::log(static_cast<double>(samples.size()));
}

double KernelDensityEstimate::shifted_weights(const Point& x, Vector& weights) const {
  const Eigen::ArrayXd r2 = (samples_.colwise() - x).colwise().squaredNorm().transpose().array();
  const Eigen::ArrayXd expo = -r2 / (2.0 * h_ * h_);
  const double shift = expo.maxCoeff();
  weights = exp_exact(expo - shift).matrix();
  return shift;
}

double KernelDensityEstimate::density(const Point& x) const {
  require_point(x, dim_, "KernelDensityEstimate::density");
  const Eigen::ArrayXd r2 = (samples_.colwise() - x).colwise().squaredNorm().transpose().array();
  return std::exp(log_norm_) * exp_exact(-r2 / (2.0 * h_ * h_)).sum();
}

Vector KernelDensityEstimate::gradient(const Point& x) const {
  require_point(x, dim_, "KernelDensityEstimate::gradient");
  const Matrix diffs = samples_.colwise() - x;
  const Vector k = exp_exact(-diffs.colwise().squaredNorm().transpose().array() / (2.0 * h_ * h_)).matrix();
  return std::exp(log_norm_) / (h_ * h_) * (diffs * k);
}

ModelEval KernelDensityEstimate::eval(const Point& x) const {
  require_point(x, dim_, "KernelDensityEstimate::eval");
  const Matrix diffs = samples_.colwise() - x;
  const Vector k = exp_exact(-diffs.colwise().squaredNorm().transpose().array() / (2.0 * h_ * h_)).matrix();
  const double c = std::exp(log_norm_);
  const double h2 = h_ * h_;
  const double ksum = k.sum();
  ModelEval out;
  out.density = c * ksum;
  out.gradient = c / h2 * (diffs * k);
  out.hessian = c / (h2 * h2) * (diffs * k.asDiagonal() * diffs.transpose());
  out.hessian.diagonal().array() -= c * ksum / h2;
  return out;
}

double KernelDensityEstimate::log_density(const Point& x) const {
  require_point(x, dim_, "KernelDensityEstimate::log_density");
  Vector w;
  const double shift = shifted_weights(x, w);
  return log_norm_ + shift + std::log(w.sum());
}

Vector KernelDensityEstimate::log_gradient(const Point& x) const {
  require_point(x, dim_, "KernelDensityEstimate::log_gradient");
  Vector w;
  shifted_weights(x, w);
  return ((samples_ * w) / w.sum() - x) / (h_ * h_);
}

// ---------------------------------------------------------------------------
// Discrepancy and probe sets
// ---------------------------------------------------------------------------

double spectral_norm_sym(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Discrepancy sup_discrepancy(const DensityModel& p, const DensityModel& q,
                            std::span<const Point> probe) {
  require(!probe.empty(), "sup_discrepancy: probe set is empty");
  require(p.dim() == q.dim(), "sup_discrepancy: models have different dimensions");
  Discrepancy out;
  for (const Point& x : probe) {
    const ModelEval a = p.eval(x);
    const ModelEval b = q.eval(x);
    out.eta0 = std::max(out.eta0, std::abs(a.density - b.density));
    out.eta1 = std::max(out.eta1, (a.gradient - b.gradient).norm());
    out.eta2 = std::max(out.eta2, (a.hessian - b.hessian).norm());
  }
  out.eta = std::max({out.eta0, out.eta1, out.eta2});
  return out;
}

std::vector<Point> regular_grid(const Vector& lo, const Vector& hi, int per_axis) {
  require(lo.size() == hi.size() && lo.size() >= 1, "regular_grid: bad bounds");
  require(per_axis >= 2, "regular_grid: need at least 2 points per axis");
  const auto d = static_cast<int>(lo.size());
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(per_axis);
  std::vector<Point> out;
  out.reserve(total);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (std::size_t t = 0; t < total; ++t) {
    Point x(d);
    for (int i = 0; i < d; ++i) {
      x[i] = lo[i] + (hi[i] - lo[i]) * idx[static_cast<std::size_t>(i)] / (per_axis - 1);
    }
    out.push_back(std::move(x));
    for (int i = 0; i < d; ++i) {
      if (++idx[static_cast<std::size_t>(i)] < per_axis) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
  }
  return out;
}

std::vector<Point> make_probe_set(std::span<const Point> data, std::span<const Point> means,
                                  double pad, int grid_per_axis) {
  require(!data.empty() || !means.empty(), "make_probe_set: no points to build a probe set from");
  std::vector<Point> out(data.begin(), data.end());
  out.insert(out.end(), means.begin(), means.end());
  const auto d = out.front().size();
  if (d <= 2) {
    Vector lo = out.front();
    Vector hi = out.front();
    for (const Point& x : out) {
      lo = lo.cwiseMin(x);
      hi = hi.cwiseMax(x);
    }
    lo.array() -= pad;
    hi.array() += pad;
    auto grid = regular_grid(lo, hi, grid_per_axis);
    out.insert(out.end(), grid.begin(), grid.end());
  }
  return out;
}

}  // namespace modeclust
