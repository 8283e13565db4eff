#include "reldiff/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reldiff {

Interval wilson_interval(long k, long n, double z) {
  if (n <= 0) throw std::invalid_argument("wilson_interval: n must be positive");
  const double p = static_cast<double>(k) / n, z2 = z * z;
  const double den = 1.0 + z2 / n;
  const double mid = (p + z2 / (2.0 * n)) / den;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / den;
  return {mid - half, mid + half};
}

double binomial_se(double p, long n) { return std::sqrt(p * (1.0 - p) / n); }

double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double D = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double F = cdf(x[i]);
    D = std::max({D, (i + 1) / n - F, F - i / n});
  }
  return D;
}

double ks_pvalue(double D, long n) {
  // Q_KS(lambda) with the small-sample correction of Stephens
  const double sn = std::sqrt(static_cast<double>(n));
  const double lam = (sn + 0.12 + 0.11 / sn) * D;
  if (lam < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double t = std::exp(-2.0 * k * k * lam * lam);
    sum += (k % 2 ? 2.0 : -2.0) * t;
    if (t < 1e-18) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("linear_fit: need matching samples, n >= 2");
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (n > 2) {
    double rss = 0;
    for (size_t i = 0; i < n; ++i) {
      const double e = y[i] - f.intercept - f.slope * x[i];
      rss += e * e;
    }
    f.slope_se = std::sqrt(rss / (n - 2) / sxx);
  }
  return f;
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& rows) {
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const Eigen::MatrixXd c = rows.rowwise() - mean;
  return c.transpose() * c / static_cast<double>(rows.rows() - 1);
}

Eigen::MatrixXd covariance_se(const Eigen::MatrixXd& rows) {
  const long n = rows.rows(), d = rows.cols();
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const Eigen::MatrixXd c = rows.rowwise() - mean;
  Eigen::MatrixXd se(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) {
      const Eigen::VectorXd p = c.col(i).cwiseProduct(c.col(j));
      const double m = p.mean();
      se(i, j) = std::sqrt((p.array() - m).square().sum() / (n - 1) / n);
    }
  return se;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace reldiff
