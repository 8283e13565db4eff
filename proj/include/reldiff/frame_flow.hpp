#pragma once
#include <vector>

#include "reldiff/geometry.hpp"

namespace reldiff {

struct FrameState {
  Frame frame;        // e_0 is the velocity
  double s = 0.0;
  Mat transport_inv;  // maps T_x back to the initial tangent space
  Vec zeta;           // developed velocity transport_inv * e_0
  Vec x0;
  Mat frame0;
};

FrameState make_frame_state(const MetricProvider& p, const Frame& f);

// Completes a unit timelike velocity at x into a pseudo-orthonormal frame.
Frame frame_from_velocity(const MetricProvider& p, const Vec& x, const Vec& velocity);

enum class StepStatus { ok, switch_chart };

struct FrameStepResult {
  FrameState state;
  StepStatus status = StepStatus::ok;
  double pre_defect = 0.0;  // pseudo-orthonormality defect before renormalization
};

// Ito step of the frame bundle SDE in local coordinates:
//   dx = e0 ds
//   de0 = -Gamma(e0, dx) + sigma sum_i e_i dw_i + (d sigma^2/2) e0 ds
//   dej = -Gamma(ej, dx) + sigma e0 dw_j + (sigma^2/2) ej ds
// Drift by RK4, noise Euler-Maruyama, then renormalization.
FrameStepResult ito_frame_step(const FrameState& st, const MetricProvider& p, double sigma, double h, const Vec& noise);

// K = sigma^2 (e0 e0^T - g^{-1})
Mat frame_noise_covariation(const FrameState& st, const MetricProvider& p, double sigma);

struct DevelopmentReport {
  double max_norm_drift = 0.0;  // max |<zeta,zeta>_{g(x0)} - 1|
  Mat qv;                       // empirical quadratic variation of zeta per unit s
  Mat qv_flat;                  // sigma^2 (zeta zeta^T - g(x0)^{-1}) averaged along the path
  double qv_rel_error = 0.0;
};
DevelopmentReport development_check(const std::vector<FrameState>& path, const MetricProvider& p, double sigma);

}  // namespace reldiff
