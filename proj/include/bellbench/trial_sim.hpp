#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "bellbench/config.hpp"
#include "bellbench/counter_rng.hpp"
#include "bellbench/qm_model.hpp"
#include "bellbench/records.hpp"

namespace bell {

/// Bias of the parity of n independent bits that each equal 0 with
/// probability 1/2 + delta: 2^(n-1) * delta^n.
double parity_epsilon(double delta, int n);

/// Setting generator: each setting is the parity of `bits_per_setting` raw
/// bits, each 0 with probability 1/2 + raw_bit_bias. Even parity selects
/// setting 1, so setting 1 occurs with probability 1/2 + epsilon().
struct RngModel {
  double raw_bit_bias = 0.0;
  int bits_per_setting = 4;

  double epsilon() const { return parity_epsilon(raw_bit_bias, bits_per_setting); }
  void validate() const;

  /// Raw-bit bias giving the requested setting excess with n bits.
  static RngModel for_epsilon(double epsilon, int bits_per_setting = 4);
};

/// Keys rng.bits_per_setting and either rng.epsilon or rng.raw_bit_bias
/// (not both). Defaults to an unbiased generator.
RngModel rng_from_config(const Config& cfg);

/// Draws the setting (1 or 2) for one side of one trial.
std::uint8_t draw_setting(const RngModel& rng, std::uint64_t seed, std::uint64_t index, RngStream side);

/// Trials are fixed slots; a "+" gets a detect time drawn from a Gaussian
/// latency profile (sigma = FWHM / 2.3548, the pump pulse width), rounded to
/// whole ns and clamped into the measurement window.
struct TrialTiming {
  double slot_period_ns = 1000.0;
  double latency_ns = 250.0;
  double pulse_fwhm_ns = 12.0;
  double window_start_ns = 100.0;
  double window_end_ns = 400.0;

  void validate() const;
  std::uint32_t draw(CounterRng& gen) const;
};

/// Keys timing.slot_period_ns, timing.latency_ns, timing.fwhm_ns,
/// timing.window_start_ns, timing.window_end_ns.
TrialTiming timing_from_config(const Config& cfg);

using RecordSink = std::function<void(const TrialRecord&)>;

struct QuantumRunConfig {
  ExperimentParams params = ExperimentParams::paper_regime();
  EberhardState state = paper_state();
  SettingAngles angles = paper_angles();
  RngModel rng{};
  TrialTiming timing{};
};

/// Generates trial `index` of a quantum run. Pure in (config, seed, index).
class QuantumTrialSource {
 public:
  explicit QuantumTrialSource(const QuantumRunConfig& config);

  TrialRecord trial(std::uint64_t seed, std::uint64_t index) const;
  const OutcomeProbabilityTable& table() const { return table_; }

 private:
  QuantumRunConfig config_;
  OutcomeProbabilityTable table_;
  std::array<std::array<std::array<double, 3>, 2>, 2> cumulative_{};
};

/// Runs n_trials quantum trials, passing each record to `sink` in index
/// order. Work is split into fixed chunks handled by `threads` workers; the
/// output does not depend on the thread count.
CountTable simulate_quantum_run(const QuantumRunConfig& config, std::uint64_t n_trials, std::uint64_t seed,
                                const RecordSink& sink = {}, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Local hidden variable side

/// Deterministic local response: the outcome each side gives for each of its
/// settings. Index bits: 0 = A(a1), 1 = A(a2), 2 = B(b1), 3 = B(b2).
struct LocalResponse {
  std::array<Outcome, 2> alice{Outcome::zero, Outcome::zero};
  std::array<Outcome, 2> bob{Outcome::zero, Outcome::zero};

  static LocalResponse from_index(int index);
  int index() const;
  static LocalResponse all_plus() { return from_index(15); }
  static LocalResponse all_zero() { return from_index(0); }

  bool operator==(const LocalResponse&) const = default;
};

/// J of a deterministic local response with settings 1/4 each.
double exact_j(const LocalResponse& response);

/// General local model: hidden value k with weight w_k, and independent
/// per-side click probabilities given (k, local setting).
struct StochasticLocalModel {
  std::vector<double> weights;
  std::vector<std::array<double, 2>> alice_plus;
  std::vector<std::array<double, 2>> bob_plus;
};

double exact_j(const StochasticLocalModel& model);

enum class AdversaryKind { deterministic_local, stochastic_local, memory_lhv, predictability_exploiting };

const char* to_string(AdversaryKind kind);

/// Everything an adversary may look at when fixing the hidden variable of
/// the next trial: the full past record plus a setting guess.
struct AdversaryView {
  std::uint64_t trial = 0;
  std::uint64_t wins = 0;
  std::uint64_t losses = 0;
  bool has_previous = false;
  TrialRecord previous{};
  std::array<std::uint8_t, 2> guess{1, 1};
};

/// Local realist strategy. Outcomes depend only on the hidden response and
/// the local setting; the response may use the past record and a guess of
/// each side's setting that is right with probability 1/2 + guess_excess.
class AdversaryStrategy {
 public:
  static AdversaryStrategy deterministic(const LocalResponse& response);
  static AdversaryStrategy stochastic(const std::array<double, 16>& weights);

  /// Builds a deterministic strategy from outcome pairs for every setting
  /// pair. Throws InvalidParameter if a side's outcome depends on the other
  /// side's setting.
  static AdversaryStrategy from_joint_table(const std::array<std::array<std::array<Outcome, 2>, 2>, 2>& table);

  /// Exploits guesses of (a1, b1) by answering "+" everywhere and otherwise
  /// keeps silent.
  static AdversaryStrategy predictability_exploiting(double guess_excess);

  /// History-driven adversary. Before `switch_at` it exploits guesses and
  /// otherwise plays a win/loss response only while it trails the q = 1/2 +
  /// 2*guess_excess pace; from `switch_at` on it ignores guesses and bets
  /// that the previous setting pair repeats.
  static AdversaryStrategy memory(double guess_excess, std::uint64_t switch_at);

  AdversaryKind kind() const { return kind_; }
  double guess_excess() const { return guess_excess_; }
  bool uses_guess() const;

  /// Picks the hidden response for the next trial. `gen` is the trial's
  /// adversary stream.
  LocalResponse choose(const AdversaryView& view, CounterRng& gen) const;

 private:
  AdversaryKind kind_ = AdversaryKind::deterministic_local;
  LocalResponse fixed_{};
  std::array<double, 16> cumulative_{};
  double guess_excess_ = 0.0;
  std::uint64_t switch_at_ = 0;
};

/// Setting predictability an analysis must assume for an LHV run: the larger
/// of the generator's own bias and the adversary's guess channel.
double effective_epsilon(const AdversaryStrategy& strategy, const RngModel& rng);

/// Outcomes of a hidden response at the given settings.
std::array<Outcome, 2> respond(const LocalResponse& response, std::uint8_t setting_a, std::uint8_t setting_b);

/// Runs an LHV trial stream. Settings follow `rng`; the guess channel tops
/// the generator's own predictability up to the strategy's guess excess.
/// If `responses` is non-null it receives the hidden response of every
/// trial.
CountTable simulate_lhv_run(const AdversaryStrategy& strategy, const RngModel& rng, std::uint64_t n_trials,
                            std::uint64_t seed, const RecordSink& sink = {},
                            std::vector<LocalResponse>* responses = nullptr, const TrialTiming& timing = {});

}  // namespace bell
