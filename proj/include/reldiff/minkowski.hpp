#pragma once
#include <vector>

#include "reldiff/geometry.hpp"

namespace reldiff {

struct MinkowskiState {
  Vec xi;  // position, 1+d
  Vec p;   // velocity on the unit hyperboloid, p0 >= 1
  double s = 0.0;
};

MinkowskiState minkowski_start(int d, double rapidity, const Vec& direction);

// Boost generators E_j = e0 (x) e_j* + e_j (x) e0*, j = 1..d
std::vector<Mat> boost_generators(int d);
// Pure boost mapping (1,0,...,0) to p.
Mat boost_to(const Vec& p);

// One Ito step: dp = sigma sum_j L(p) e_j dw_j + (d sigma^2/2) p h, then
// renormalization onto the hyperboloid; xi advanced with the midpoint velocity.
MinkowskiState step_minkowski(const MinkowskiState& st, double sigma, double h, const Vec& noise);

struct AsymptoticDirection {
  Vec theta;              // p_vec / |p_vec| at the final sample
  Vec mean_velocity;      // xi_vec / xi0 at the final sample
  bool undecided = false; // final p0 below the threshold
};
AsymptoticDirection asymptotic_direction(const std::vector<MinkowskiState>& path, double p0_threshold);

// Density of the exit direction on S^{d-1}, w.r.t. the surface measure.
double scattering_density(const Vec& p0, const Vec& theta);
// Polar-angle CDF of that density for d = 2 (angle in (-pi, pi], measured from the x1 axis).
double scattering_cdf_2d(const Vec& p0, double angle);

}  // namespace reldiff
