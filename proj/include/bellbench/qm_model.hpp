#pragma once

#include <array>
#include <complex>

#include "bellbench/config.hpp"

namespace bell {

/// Two-photon polarization state (|V>_A|H>_B + r|H>_A|V>_B) / sqrt(1 + r^2).
struct EberhardState {
  double r = -1.0;
};

/// Amplitudes over the basis {HH, HV, VH, VV}, Alice's photon first.
std::array<std::complex<double>, 4> state_vector(const EberhardState& state);

/// Polarizer angles in degrees, each reduced into (-90, 90].
///
/// A polarizer at angle t transmits cos(t)|H> + sin(t)|V>; transmission is
/// the "+" outcome.
class SettingAngles {
 public:
  SettingAngles() = default;
  SettingAngles(double a1, double a2, double b1, double b2);

  double a1() const { return deg_[0]; }
  double a2() const { return deg_[1]; }
  double b1() const { return deg_[2]; }
  double b2() const { return deg_[3]; }

  /// Setting index 0 or 1 for each side.
  double alice_deg(int i) const { return deg_[i]; }
  double bob_deg(int j) const { return deg_[2 + j]; }

  const std::array<double, 4>& degrees() const { return deg_; }

 private:
  std::array<double, 4> deg_{0.0, 45.0, 22.5, -22.5};
};

/// Reduce an angle in degrees into (-90, 90].
double reduce_polarization_angle(double deg);

enum class MultiPairModel { none, poissonian };

struct ExperimentParams {
  double eta_a = 1.0;
  double eta_b = 1.0;
  double visibility = 1.0;
  double background_a = 0.0;
  double background_b = 0.0;
  double pair_rate = 1.0;   // pairs per second
  double pulse_rate = 1.0;  // trials per second
  MultiPairModel multi_pair_model = MultiPairModel::none;

  /// Mean number of pairs per trial. Under `none` this is the probability
  /// that a trial carries exactly one pair, so it must not exceed 1.
  double mean_pairs() const { return pair_rate / pulse_rate; }

  /// Throws InvalidParameter when any field is out of range.
  void validate() const;

  /// One deterministic pair per trial, no losses, no noise.
  static ExperimentParams ideal();

  /// 78.6% / 76.2% heralding, 3,500 pairs/s at 1 MHz, visibility 0.99,
  /// background 1e-6 per trial per arm, Poissonian pair number.
  static ExperimentParams paper_regime();

  /// Same as paper_regime() but with a pure state and no background.
  static ExperimentParams paper_regime_pure();
};

/// Published operating point: r = -2.9, angles 94.4, 62.4, -6.5, 25.5 deg.
EberhardState paper_state();
SettingAngles paper_angles();

/// Outcome probabilities for one setting pair. First symbol is Alice.
struct OutcomeProbs {
  double pp = 0.0;  // ++
  double p0 = 0.0;  // +0
  double op = 0.0;  // 0+
  double oo = 1.0;  // 00

  double sum() const { return pp + p0 + op + oo; }
  double alice_plus() const { return pp + p0; }
  double bob_plus() const { return pp + op; }
};

/// Outcome probabilities conditioned on each setting pair (i, j) with
/// i indexing Alice's setting a_{i+1} and j Bob's setting b_{j+1}.
struct OutcomeProbabilityTable {
  std::array<std::array<OutcomeProbs, 2>, 2> cell{};

  const OutcomeProbs& at(int i, int j) const { return cell[i][j]; }
  OutcomeProbs& at(int i, int j) { return cell[i][j]; }
};

OutcomeProbabilityTable outcome_probabilities(const EberhardState& state,
                                              const SettingAngles& angles,
                                              const ExperimentParams& params);

/// J = p++(a1b1) - p+0(a1b2) - p0+(a2b1) - p++(a2b2). Local realism: J <= 0.
double j_value(const OutcomeProbabilityTable& table);

/// Reads `eta_a`, `eta_b`, `visibility`, `background_a`, `background_b`,
/// `pair_rate`, `pulse_rate` and `multi_pair_model` (none|poissonian);
/// missing keys keep the values from `defaults`.
ExperimentParams params_from_config(const Config& cfg,
                                    const ExperimentParams& defaults = ExperimentParams::paper_regime());

/// Reads `state.r`; falls back to `fallback`.
EberhardState state_from_config(const Config& cfg, const EberhardState& fallback = paper_state());

/// Reads `angles.a1` .. `angles.b2` in degrees.
SettingAngles angles_from_config(const Config& cfg, const SettingAngles& fallback = paper_angles());

const char* to_string(MultiPairModel m);

}  // namespace bell
