#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bellbench/nelder_mead.hpp"
#include "bellbench/qm_model.hpp"

namespace bell {

struct SettingPoint {
  EberhardState state;
  SettingAngles angles;
};

struct OptimizationResult {
  EberhardState state;
  SettingAngles angles;
  double j_star = 0.0;
  std::vector<double> trace;  // best-so-far J after each simplex iteration
  int starts = 0;
  int failed_starts = 0;
  std::uint64_t seed = 0;

  SettingPoint point() const { return {state, angles}; }
};

struct OptimizeOptions {
  int starts = 20;
  double r_min = 0.1;  // |r| start range
  double r_max = 10.0;
  NelderMeadOptions simplex{};
  std::vector<SettingPoint> extra_starts;  // tried in addition to the random starts
};

/// J at a setting point; the objective that optimize_settings maximizes.
double predicted_j(const SettingPoint& point, const ExperimentParams& params);

/// Multi-start simplex search for the (r, a1, a2, b1, b2) maximizing J.
///
/// Internally r = tan(phi) so that near-product states (|r| -> 0 or
/// infinity) stay reachable. The result is canonicalized (see
/// canonicalize()) and j_star is re-evaluated at the returned point.
OptimizationResult optimize_settings(const ExperimentParams& params, std::uint64_t seed,
                                     const OptimizeOptions& opts = {});

/// Picks the representative of a setting point's symmetry class with
/// b1 in (-45, 45], r <= 0 and (b2 - b1) mod 180 in (0, 90].
///
/// The class is generated by r -> 1/r with every angle shifted by 90 deg,
/// r -> -r with Alice's angles mirrored, and mirroring every angle; J is
/// invariant under all three.
SettingPoint canonicalize(const SettingPoint& point);

struct ThresholdResult {
  std::optional<double> eta;        // empty: no violation even at unit efficiency
  double j_at_unit_efficiency = 0.0;
  int bisection_steps = 0;
};

struct ThresholdOptions {
  double eta_tolerance = 1e-5;
  double j_tolerance = 1e-14;  // J above this counts as a violation
  int starts = 12;
  std::uint64_t seed = 1;
};

/// Smallest symmetric heralding efficiency with max J > 0, for one pair per
/// trial and the given visibility and per-arm background probability.
ThresholdResult critical_efficiency(double visibility, double background, const ThresholdOptions& opts = {});

}  // namespace bell
