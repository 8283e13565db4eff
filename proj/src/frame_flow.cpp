#include "reldiff/frame_flow.hpp"

#include <cmath>
#include <stdexcept>

namespace reldiff {

FrameState make_frame_state(const MetricProvider& p, const Frame& f) {
  FrameState st;
  st.frame = renormalize_frame(f, p);
  st.x0 = f.x;
  st.frame0 = st.frame.e;
  const int n = p.dim();
  st.transport_inv = Mat::Identity(n, n);
  st.zeta = st.frame.e.col(0);
  return st;
}

Frame frame_from_velocity(const MetricProvider& p, const Vec& x, const Vec& velocity) {
  const int n = p.dim();
  Frame f;
  f.x = x;
  f.e = Mat::Identity(n, n);
  f.e.col(0) = velocity;
  // pick coordinate directions that are not parallel to the velocity
  int k = 1;
  for (int j = 0; j < n && k < n; ++j) {
    Vec c = Vec::Zero(n);
    c(j) = 1.0;
    Mat trial = f.e.leftCols(k);
    trial.conservativeResize(n, k + 1);
    trial.col(k) = c;
    Eigen::FullPivLU<Mat> lu(trial);
    if (lu.rank() == k + 1) f.e.col(k++) = c;
  }
  // spatial legs must be made spacelike: project out the velocity first
  const Mat g = metric(p, x);
  for (int j = 1; j < n; ++j) f.e.col(j) -= f.e.col(j).dot(g * velocity) / velocity.dot(g * velocity) * velocity;
  return renormalize_frame(f, p);
}

namespace {

struct Deriv {
  Vec dx;
  Mat dE;
};

Deriv drift(const MetricProvider& p, const Vec& x, const Mat& E, double sigma) {
  const int n = p.dim();
  const int d = n - 1;
  const Christoffel G = christoffel(p, x);
  const Vec e0 = E.col(0);
  Deriv out{e0, Mat::Zero(n, n)};
  for (int j = 0; j < n; ++j) {
    const double c = (j == 0 ? d : 1.0) * 0.5 * sigma * sigma;
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        if (e0(i) == 0.0) continue;
        for (int l = 0; l < n; ++l) acc += G(k, i, l) * E(l, j) * e0(i);
      }
      out.dE(k, j) = -acc + c * E(k, j);
    }
  }
  return out;
}

}  // namespace

FrameStepResult ito_frame_step(const FrameState& st, const MetricProvider& p, double sigma, double h, const Vec& noise) {
  const int n = p.dim();
  const int d = n - 1;
  if (noise.size() != d) throw std::invalid_argument("ito_frame_step: need d normals");
  FrameStepResult res;
  res.state = st;
  const Vec& x = st.frame.x;
  const Mat& E = st.frame.e;
  Vec x1;
  Mat E1;
  try {
    const Deriv k1 = drift(p, x, E, sigma);
    const Deriv k2 = drift(p, x + 0.5 * h * k1.dx, E + 0.5 * h * k1.dE, sigma);
    const Deriv k3 = drift(p, x + 0.5 * h * k2.dx, E + 0.5 * h * k2.dE, sigma);
    const Deriv k4 = drift(p, x + h * k3.dx, E + h * k3.dE, sigma);
    x1 = x + (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    E1 = E + (h / 6.0) * (k1.dE + 2.0 * k2.dE + 2.0 * k3.dE + k4.dE);
    check_domain(p, x1);
  } catch (const ChartDomainError&) {
    res.status = StepStatus::switch_chart;
    return res;
  }
  if (sigma != 0.0) {
    const double sh = std::sqrt(h);
    for (int i = 1; i <= d; ++i) {
      E1.col(0) += sigma * sh * noise(i - 1) * E.col(i);
      E1.col(i) += sigma * sh * noise(i - 1) * E.col(0);
    }
  }
  Frame f1{x1, E1};
  res.pre_defect = frame_defect(p, f1);
  f1 = renormalize_frame(f1, p);

  FrameState& o = res.state;
  o.frame = f1;
  o.s = st.s + h;
  const Vec v = (x1 - x) / h;
  o.transport_inv = transport_inverse_step(st.transport_inv, p, x, v, h);
  if (p.chart != Chart::minkowski) o.transport_inv = restore_transport(o.transport_inv, f1.e, st.frame0);
  o.zeta = o.transport_inv * f1.e.col(0);
  return res;
}

Mat frame_noise_covariation(const FrameState& st, const MetricProvider& p, double sigma) {
  const Vec e0 = st.frame.e.col(0);
  return sigma * sigma * (e0 * e0.transpose() - inverse_metric(p, st.frame.x));
}

DevelopmentReport development_check(const std::vector<FrameState>& path, const MetricProvider& p, double sigma) {
  DevelopmentReport rep;
  if (path.empty()) return rep;
  const int n = p.dim();
  const Mat g0 = metric(p, path.front().x0);
  const Mat g0i = inverse_metric(p, path.front().x0);
  rep.qv = Mat::Zero(n, n);
  rep.qv_flat = Mat::Zero(n, n);
  for (const FrameState& st : path)
    rep.max_norm_drift = std::max(rep.max_norm_drift, std::abs(st.zeta.dot(g0 * st.zeta) - 1.0));
  if (path.size() < 2) return rep;
  double total = 0.0;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec dz = path[i + 1].zeta - path[i].zeta;
    const double ds = path[i + 1].s - path[i].s;
    rep.qv += dz * dz.transpose();
    rep.qv_flat += sigma * sigma * (path[i].zeta * path[i].zeta.transpose() - g0i) * ds;
    total += ds;
  }
  rep.qv /= total;
  rep.qv_flat /= total;
  const double scale = rep.qv_flat.cwiseAbs().maxCoeff();
  rep.qv_rel_error = scale > 0.0 ? (rep.qv - rep.qv_flat).cwiseAbs().maxCoeff() / scale : rep.qv.cwiseAbs().maxCoeff();
  return rep;
}

}  // namespace reldiff
