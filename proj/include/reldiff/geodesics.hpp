#pragma once
#include <optional>
#include <string>
#include <vector>

namespace reldiff {

// P(u) = (1 - R u)(1 + b^2 u^2)
double effective_potential(double u, double b, double R);

struct CriticalPoints {
  double u1, u2;   // u1 >= u2
  double P1, P2;
};
std::optional<CriticalPoints> critical_points(double b, double R);

enum class TimelikeCase { c1_1, c1_2, c1_3, c2_1, c2_2_1, c2_2_2, c2_3, c2_4, c2_5_1, c2_5_2, c2_6, infeasible };
std::string case_name(TimelikeCase c);

// Positive root of g(r) = r^3 (a^2 - P(1/r)) with its multiplicity.
struct RadialRoot {
  double r;
  int multiplicity;
};

struct TimelikeClass {
  TimelikeCase tag = TimelikeCase::infeasible;
  std::vector<RadialRoot> roots;  // ascending
  std::optional<CriticalPoints> crit;
};
TimelikeClass classify_timelike(double a, double b, double r0, double R, double tie_tol = 1e-12);
std::vector<RadialRoot> radial_roots(double a, double b, double R);

// sigma = 0 radial motion from r0 with sign(dr/ds) = direction, by quadrature of
// |s| = int dr / sqrt(a^2 - (1 - R/r)(1 + b^2/r^2)).
class TimelikeOrbit {
public:
  TimelikeOrbit(double a, double b, double r0, int direction, double R);

  double r_at(double s) const;
  double phi_at(double s) const;  // angle swept in the orbital plane

  bool circular() const { return circular_; }
  bool asymptotic() const { return asymptotic_; }   // approaches a multiple root in infinite time
  bool singular() const { return singular_; }       // reaches r = 0 in finite time
  bool unbounded() const { return unbounded_; }
  bool periodic() const { return periodic_; }
  double period() const { return period_; }         // radial period when periodic
  double s_end() const { return s_end_; }           // proper time of reaching r = 0 (inf otherwise)
  double lower() const { return lo_; }
  double upper() const { return hi_; }

private:
  enum class End { zero, root, infinity };
  double a_, b_, R_, r0_;
  int dir_;
  double lo_ = 0.0, hi_ = 0.0;
  End lo_kind_ = End::zero, hi_kind_ = End::infinity;
  int lo_mult_ = 0, hi_mult_ = 0;
  bool circular_ = false, asymptotic_ = false, singular_ = false, unbounded_ = false, periodic_ = false;
  double period_ = 0.0, s_end_ = 0.0;
  double first_leg_ = 0.0;  // duration to the first boundary in the start direction

  double g(double r) const;
  double integral(double x, double y, int weight) const;  // x <= y inside [lo, hi]
  double solve_leg(double from, int dir, double ds) const;
  void locate(double s, double& r, double* phi) const;
};

enum class NullCase { c0, c1, c2 };
struct NullClass {
  NullCase tag;
  double rho = 0.0;        // maximal confined radius (case 2)
  double rho_prime = 0.0;  // minimum of the outer branch (case 2)
};
NullClass classify_null(double alpha, double R, double tie_tol = 1e-12);

// int_0^rho dr / sqrt((R - r + l^2 r^3) r) with l^2 = (1 - R/rho)/rho^2
double deflection_integral(double rho, double R);
double deflection_integral_direct(double rho, double R);  // independent scheme

// phi(s) on the horizon cylinder for a = 0 < |k| < b
double horizon_cylinder_geodesic(double b, double k, double s, double R, double s0 = 0.0, int sign = 1);

}  // namespace reldiff
