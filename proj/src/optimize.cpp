#include "bellbench/optimize.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "bellbench/error.hpp"

namespace bell {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Search coordinates: phi (deg, r = tan phi), a1, a2, b1, b2 (deg).
std::vector<double> to_coords(const SettingPoint& p) {
  const auto& d = p.angles.degrees();
  return {std::atan(p.state.r) / kDeg, d[0], d[1], d[2], d[3]};
}

SettingPoint from_coords(const std::vector<double>& x) {
  return {EberhardState{std::tan(x[0] * kDeg)}, SettingAngles(x[1], x[2], x[3], x[4])};
}

}  // namespace

double predicted_j(const SettingPoint& point, const ExperimentParams& params) {
  return j_value(outcome_probabilities(point.state, point.angles, params));
}

SettingPoint canonicalize(const SettingPoint& point) {
  double r = point.state.r;
  auto d = point.angles.degrees();
  if (std::abs(d[2]) > 45.0 || d[2] == -45.0) {
    if (r != 0.0) {
      r = 1.0 / r;
      for (auto& a : d) a = reduce_polarization_angle(a + 90.0);
    }
  }
  if (r > 0.0) {
    r = -r;
    d[0] = reduce_polarization_angle(-d[0]);
    d[1] = reduce_polarization_angle(-d[1]);
  }
  double gap = std::fmod(d[3] - d[2], 180.0);
  if (gap <= 0.0) gap += 180.0;
  if (gap > 90.0) {
    for (auto& a : d) a = reduce_polarization_angle(-a);
  }
  return {EberhardState{r}, SettingAngles(d[0], d[1], d[2], d[3])};
}

OptimizationResult optimize_settings(const ExperimentParams& params, std::uint64_t seed,
                                     const OptimizeOptions& opts) {
  params.validate();
  if (opts.starts < 0 || !(opts.r_min > 0.0) || !(opts.r_max >= opts.r_min)) {
    throw InvalidParameter("invalid optimizer start configuration");
  }

  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> magnitude(opts.r_min, opts.r_max);
  std::uniform_real_distribution<double> angle(0.0, 180.0);
  std::bernoulli_distribution negative(0.5);

  std::vector<SettingPoint> starts = opts.extra_starts;
  for (int s = 0; s < opts.starts; ++s) {
    const double mag = magnitude(gen);
    const double r = negative(gen) ? -mag : mag;
    const double a1 = angle(gen), a2 = angle(gen), b1 = angle(gen), b2 = angle(gen);
    starts.push_back({EberhardState{r}, SettingAngles(a1, a2, b1, b2)});
  }

  auto objective = [&](const std::vector<double>& x) {
    const double j = predicted_j(from_coords(x), params);
    return std::isfinite(j) ? -j : std::numeric_limits<double>::quiet_NaN();
  };

  OptimizationResult result;
  result.seed = seed;
  result.starts = static_cast<int>(starts.size());
  double running = -std::numeric_limits<double>::infinity();
  double best = running;
  std::vector<double> best_x;
  for (const auto& start : starts) {
    std::vector<double> local_trace;
    auto run = nelder_mead_minimize(objective, to_coords(start), opts.simplex,
                                    [&](double fbest) { local_trace.push_back(-fbest); });
    if (!std::isfinite(run.value)) {
      ++result.failed_starts;
      continue;
    }
    for (double j : local_trace) {
      if (std::isfinite(j)) running = std::max(running, j);
      if (std::isfinite(running)) result.trace.push_back(running);
    }
    if (-run.value > best) {
      best = -run.value;
      best_x = run.x;
    }
  }
  if (best_x.empty()) throw std::runtime_error("optimizer: every start failed");

  const SettingPoint canon = canonicalize(from_coords(best_x));
  result.state = canon.state;
  result.angles = canon.angles;
  result.j_star = predicted_j(canon, params);
  return result;
}

ThresholdResult critical_efficiency(double visibility, double background, const ThresholdOptions& opts) {
  ExperimentParams p = ExperimentParams::ideal();
  p.visibility = visibility;
  p.background_a = background;
  p.background_b = background;
  p.validate();

  std::vector<SettingPoint> warm;
  std::uint64_t seed = opts.seed;
  auto max_j = [&](double eta) {
    p.eta_a = eta;
    p.eta_b = eta;
    OptimizeOptions o;
    o.starts = opts.starts;
    o.extra_starts = warm;
    return optimize_settings(p, seed++, o);
  };

  ThresholdResult out;
  const auto top = max_j(1.0);
  out.j_at_unit_efficiency = top.j_star;
  if (!(top.j_star > opts.j_tolerance)) return out;
  warm = {top.point()};

  double lo = 0.0, hi = 1.0;
  while (hi - lo > opts.eta_tolerance) {
    const double mid = 0.5 * (lo + hi);
    const auto r = max_j(mid);
    ++out.bisection_steps;
    if (r.j_star > opts.j_tolerance) {
      hi = mid;
      warm = {r.point()};
    } else {
      lo = mid;
    }
  }
  out.eta = hi;
  return out;
}

}  // namespace bell
