#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bellbench/config.hpp"

namespace bell {

/// Speed of light in vacuum, m/ns.
inline constexpr double kSpeedOfLight = 0.299792458;

/// An interval on the 1-D experiment axis. Times in ns, position in m.
struct SpacetimeEvent {
  std::string label;
  double position_m = 0.0;
  double t_start_ns = 0.0;
  double t_end_ns = 0.0;
  double uncertainty_ns = 0.0;  // one standard deviation

  void validate() const;
};

struct Margin {
  double value_ns = 0.0;
  double sd_ns = 0.0;
};

/// Light-cone margin for `cause` not influencing `effect`:
/// |dx|/c - (effect.t_end - cause.t_start). Positive means no light-speed
/// signal leaving any point of `cause` reaches `effect` before it ends.
/// The standard deviation is the root-sum-square of the two uncertainties.
Margin light_cone_margin(const SpacetimeEvent& cause, const SpacetimeEvent& effect,
                         double c = kSpeedOfLight);

/// A delay-budget entry: `item.<name> = <value_ns> <sd_ns> [estimated]`.
struct BudgetItem {
  std::string name;
  double value_ns = 0.0;
  double sd_ns = 0.0;
  bool estimated = false;
};

/// constant + sum(coefficient * item)
struct LinearForm {
  double constant = 0.0;
  std::map<std::string, double> terms;

  static LinearForm parse(const std::string& text);
  LinearForm& operator+=(const LinearForm& o);
  LinearForm operator-() const;

  double value(const std::map<std::string, BudgetItem>& items) const;
  double sd(const std::map<std::string, BudgetItem>& items) const;
};

struct EventSpec {
  std::string label;
  double position_m = 0.0;
  LinearForm start;
  LinearForm end;
};

/// Events E, a, b, A, B are required. Optional photons_A / photons_B give
/// the detection-time span that must fall inside the windows A / B.
///
/// Keys:
///   speed_of_light = 0.299792458
///   item.<name> = <value_ns> <sd_ns> [estimated]
///   event.<label>.position = <m>
///   event.<label>.start = <expr>   e.g. `choice_end - bit_first - bits_rest`
///   event.<label>.end = <expr>
///   audit.k = 3
struct SpacetimeConfig {
  double speed_of_light = kSpeedOfLight;
  double k = 3.0;
  std::map<std::string, BudgetItem> items;
  std::map<std::string, EventSpec> events;

  static SpacetimeConfig from_config(const Config& cfg);

  void validate() const;
  bool has_event(const std::string& label) const { return events.count(label) != 0; }
  SpacetimeEvent event(const std::string& label) const;

  /// Ordered margin with the uncertainty of the combined linear form, so
  /// line items shared by both events are not double counted.
  Margin margin(const std::string& cause, const std::string& effect) const;

  void shift_times(double dt_ns);
  void scale_uncertainties(double factor);
};

struct SeparationCheck {
  std::string name;
  std::string cause;
  std::string effect;
  Margin margin;
  bool positive = false;
  bool significant = false;  // margin >= k * sd
};

struct ClosureCheck {
  std::string window;
  std::string photons;
  double slack_start_ns = 0.0;  // photons.start - window.start
  double slack_end_ns = 0.0;    // window.end - photons.end
  bool inside = false;
};

struct AuditReport {
  double k = 3.0;
  std::vector<SeparationCheck> separations;
  std::vector<ClosureCheck> closures;
  std::vector<std::string> flags;

  bool passed() const { return flags.empty(); }
  const SeparationCheck& separation(const std::string& name) const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Checks a vs B, b vs A, E vs a, E vs b and window closure.
AuditReport verify_config(const SpacetimeConfig& cfg);

}  // namespace bell
