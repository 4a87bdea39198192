#pragma once

#include <algorithm>

namespace carelab {

struct Interval {
  double lo;
  double hi;

  constexpr double clip(double v) const { return std::clamp(v, lo, hi); }
  /// Clip, and land exactly on a bound when within kSnap of it, so repeated
  /// fixed steps (0.6 - 10 * 0.02) reach the bound instead of hovering above it.
  constexpr double clip_snapped(double v) const {
    constexpr double kSnap = 1e-9;
    if (!(v - lo >= kSnap)) return lo;  // also maps NaN to lo
    if (hi - v < kSnap) return hi;
    return v;
  }
  constexpr bool contains(double v) const { return v >= lo && v <= hi; }
};

inline constexpr Interval kSocialIntensityRange{0.8, 1.5};
inline constexpr Interval kVisitThresholdRange{0.4, 0.6};
inline constexpr Interval kVisitProbabilityRange{0.15, 0.5};

/// The three intervention levers. Every constructor and mutation clips into
/// the admissible ranges, so an out-of-range PolicyParams cannot exist.
class PolicyParams {
 public:
  /// Static policy (1.0, 0.6, 0.3), also the starting point of adaptive runs.
  constexpr PolicyParams() = default;
  constexpr PolicyParams(double theta_s, double theta_t, double theta_p)
      : theta_s_(kSocialIntensityRange.clip_snapped(theta_s)),
        theta_t_(kVisitThresholdRange.clip_snapped(theta_t)),
        theta_p_(kVisitProbabilityRange.clip_snapped(theta_p)) {}

  /// Social event intensity.
  constexpr double theta_s() const { return theta_s_; }
  /// Home-visit eligibility threshold on loneliness.
  constexpr double theta_t() const { return theta_t_; }
  /// Home-visit success probability.
  constexpr double theta_p() const { return theta_p_; }

  constexpr PolicyParams adjusted(double d_s, double d_t, double d_p) const {
    return {theta_s_ + d_s, theta_t_ + d_t, theta_p_ + d_p};
  }

  constexpr bool operator==(const PolicyParams &) const = default;

 private:
  double theta_s_ = 1.0;
  double theta_t_ = 0.6;
  double theta_p_ = 0.3;
};

}  // namespace carelab
