#pragma once
#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace reldiff {

struct Interval {
  double lo, hi;
};
Interval wilson_interval(long successes, long n, double z = 1.96);
double binomial_se(double p, long n);

// One-sample Kolmogorov-Smirnov statistic against a continuous CDF and its asymptotic p-value.
double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf);
double ks_pvalue(double D, long n);

struct LinearFit {
  double slope = 0.0, intercept = 0.0, slope_se = 0.0;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// Sample covariance of row vectors, and the standard error of each entry.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& rows);
Eigen::MatrixXd covariance_se(const Eigen::MatrixXd& rows);

double median(std::vector<double> v);

}  // namespace reldiff
