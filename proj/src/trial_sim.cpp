#include "bellbench/trial_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "bellbench/error.hpp"

namespace bell {

double parity_epsilon(double delta, int n) {
  if (!std::isfinite(delta) || delta < 0.0 || delta >= 0.5) {
    throw InvalidParameter("raw bit bias must be in [0, 0.5), got " + std::to_string(delta));
  }
  if (n < 1) throw InvalidParameter("bits per setting must be >= 1");
  return std::ldexp(std::pow(delta, n), n - 1);
}

void RngModel::validate() const { (void)parity_epsilon(raw_bit_bias, bits_per_setting); }

RngModel RngModel::for_epsilon(double epsilon, int bits_per_setting) {
  if (!std::isfinite(epsilon) || epsilon < 0.0 || epsilon >= 0.5) {
    throw InvalidParameter("epsilon must be in [0, 0.5)");
  }
  if (bits_per_setting < 1) throw InvalidParameter("bits per setting must be >= 1");
  // epsilon = 2^(n-1) delta^n  =>  delta = (epsilon / 2^(n-1))^(1/n)
  const double delta = std::pow(std::ldexp(epsilon, 1 - bits_per_setting), 1.0 / bits_per_setting);
  return {delta, bits_per_setting};
}

RngModel rng_from_config(const Config& cfg) {
  const int bits = static_cast<int>(cfg.get_int("rng.bits_per_setting", 4));
  if (cfg.has("rng.epsilon") && cfg.has("rng.raw_bit_bias")) {
    throw InvalidParameter("give rng.epsilon or rng.raw_bit_bias, not both");
  }
  RngModel m{cfg.get_double("rng.raw_bit_bias", 0.0), bits};
  if (cfg.has("rng.epsilon")) m = RngModel::for_epsilon(cfg.get_double("rng.epsilon"), bits);
  m.validate();
  return m;
}

TrialTiming timing_from_config(const Config& cfg) {
  TrialTiming t;
  t.slot_period_ns = cfg.get_double("timing.slot_period_ns", t.slot_period_ns);
  t.latency_ns = cfg.get_double("timing.latency_ns", t.latency_ns);
  t.pulse_fwhm_ns = cfg.get_double("timing.fwhm_ns", t.pulse_fwhm_ns);
  t.window_start_ns = cfg.get_double("timing.window_start_ns", t.window_start_ns);
  t.window_end_ns = cfg.get_double("timing.window_end_ns", t.window_end_ns);
  t.validate();
  return t;
}

std::uint8_t draw_setting(const RngModel& rng, std::uint64_t seed, std::uint64_t index, RngStream side) {
  CounterRng gen(seed, index, side);
  const double p_zero = 0.5 + rng.raw_bit_bias;
  unsigned parity = 0;
  for (int k = 0; k < rng.bits_per_setting; ++k) {
    const double u = (static_cast<double>(gen.next_u32()) + 0.5) * 0x1.0p-32;
    parity ^= u < p_zero ? 0u : 1u;
  }
  return parity == 0 ? 1 : 2;
}

void TrialTiming::validate() const {
  if (!(slot_period_ns > 0.0) || !(pulse_fwhm_ns >= 0.0) || !(window_start_ns >= 0.0) ||
      !(window_end_ns >= window_start_ns) || !(window_end_ns < slot_period_ns) ||
      !(window_end_ns <= 4.0e9)) {
    throw InvalidParameter("inconsistent trial timing");
  }
}

std::uint32_t TrialTiming::draw(CounterRng& gen) const {
  const double sigma = pulse_fwhm_ns / 2.3548200450309493;
  const double t = std::round(latency_ns + sigma * gen.normal());
  return static_cast<std::uint32_t>(std::clamp(t, std::ceil(window_start_ns), std::floor(window_end_ns)));
}

QuantumTrialSource::QuantumTrialSource(const QuantumRunConfig& config)
    : config_(config), table_(outcome_probabilities(config.state, config.angles, config.params)) {
  config_.rng.validate();
  config_.timing.validate();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const auto& c = table_.at(i, j);
      cumulative_[i][j] = {c.pp, c.pp + c.p0, c.pp + c.p0 + c.op};
    }
  }
}

TrialRecord QuantumTrialSource::trial(std::uint64_t seed, std::uint64_t index) const {
  TrialRecord rec;
  rec.index = index;
  rec.setting_a = draw_setting(config_.rng, seed, index, RngStream::alice_setting);
  rec.setting_b = draw_setting(config_.rng, seed, index, RngStream::bob_setting);

  CounterRng gen(seed, index, RngStream::source);
  const auto& cum = cumulative_[rec.setting_a - 1][rec.setting_b - 1];
  const double u = gen.uniform();
  if (u < cum[0]) {
    rec.outcome_a = rec.outcome_b = Outcome::plus;
  } else if (u < cum[1]) {
    rec.outcome_a = Outcome::plus;
  } else if (u < cum[2]) {
    rec.outcome_b = Outcome::plus;
  }
  if (rec.outcome_a == Outcome::plus) rec.time_a = config_.timing.draw(gen);
  if (rec.outcome_b == Outcome::plus) rec.time_b = config_.timing.draw(gen);
  return rec;
}

CountTable simulate_quantum_run(const QuantumRunConfig& config, std::uint64_t n_trials, std::uint64_t seed,
                                const RecordSink& sink, unsigned threads) {
  const QuantumTrialSource source(config);
  constexpr std::uint64_t kChunk = 1u << 16;
  const std::uint64_t n_chunks = (n_trials + kChunk - 1) / kChunk;
  threads = std::max(1u, threads);

  CountTable total;
  std::vector<CountTable> partial(threads);
  std::vector<std::vector<TrialRecord>> buffers(sink ? threads : 0);

  for (std::uint64_t first = 0; first < n_chunks; first += threads) {
    const unsigned batch = static_cast<unsigned>(std::min<std::uint64_t>(threads, n_chunks - first));
    auto work = [&](unsigned w) {
      const std::uint64_t begin = (first + w) * kChunk;
      const std::uint64_t end = std::min(n_trials, begin + kChunk);
      CountTable local;
      if (sink) buffers[w].clear();
      for (std::uint64_t i = begin; i < end; ++i) {
        const TrialRecord rec = source.trial(seed, i);
        local.add(rec);
        if (sink) buffers[w].push_back(rec);
      }
      partial[w] = local;
    };
    if (batch == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < batch; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    for (unsigned w = 0; w < batch; ++w) {
      total.merge(partial[w]);
      if (sink) {
        for (const auto& rec : buffers[w]) sink(rec);
      }
    }
  }
  return total;
}

// ---------------------------------------------------------------------------

LocalResponse LocalResponse::from_index(int index) {
  if (index < 0 || index > 15) throw InvalidParameter("local response index must be in [0, 15]");
  auto bit = [&](int k) { return (index >> k) & 1 ? Outcome::plus : Outcome::zero; };
  return {{bit(0), bit(1)}, {bit(2), bit(3)}};
}

int LocalResponse::index() const {
  auto b = [](Outcome o) { return o == Outcome::plus ? 1 : 0; };
  return b(alice[0]) | b(alice[1]) << 1 | b(bob[0]) << 2 | b(bob[1]) << 3;
}

std::array<Outcome, 2> respond(const LocalResponse& response, std::uint8_t setting_a, std::uint8_t setting_b) {
  return {response.alice[setting_a - 1], response.bob[setting_b - 1]};
}

double exact_j(const LocalResponse& r) {
  auto plus = [](Outcome o) { return o == Outcome::plus ? 1.0 : 0.0; };
  const double a1 = plus(r.alice[0]), a2 = plus(r.alice[1]);
  const double b1 = plus(r.bob[0]), b2 = plus(r.bob[1]);
  return a1 * b1 - a1 * (1.0 - b2) - (1.0 - a2) * b1 - a2 * b2;
}

double exact_j(const StochasticLocalModel& m) {
  if (m.alice_plus.size() != m.weights.size() || m.bob_plus.size() != m.weights.size()) {
    throw InvalidParameter("stochastic local model: inconsistent sizes");
  }
  double total_weight = 0.0;
  double j = 0.0;
  for (std::size_t k = 0; k < m.weights.size(); ++k) {
    const double w = m.weights[k];
    if (!(w >= 0.0)) throw InvalidParameter("stochastic local model: negative weight");
    const auto& a = m.alice_plus[k];
    const auto& b = m.bob_plus[k];
    j += w * (a[0] * b[0] - a[0] * (1.0 - b[1]) - (1.0 - a[1]) * b[0] - a[1] * b[1]);
    total_weight += w;
  }
  if (!(total_weight > 0.0)) throw InvalidParameter("stochastic local model: weights sum to zero");
  return j / total_weight;
}

const char* to_string(AdversaryKind kind) {
  switch (kind) {
    case AdversaryKind::deterministic_local: return "deterministic_local";
    case AdversaryKind::stochastic_local: return "stochastic_local";
    case AdversaryKind::memory_lhv: return "memory_lhv";
    case AdversaryKind::predictability_exploiting: return "predictability_exploiting";
  }
  return "unknown";
}

namespace {

void require_guess_excess(double e) {
  if (!std::isfinite(e) || e < 0.0 || e >= 0.5) throw InvalidParameter("guess excess must be in [0, 0.5)");
}

// Wins exactly at a1b1, loses exactly at a1b2.
const LocalResponse kWinA1B1LoseA1B2{{Outcome::plus, Outcome::plus}, {Outcome::plus, Outcome::zero}};
// Wins exactly at a1b1, loses exactly at a2b1.
const LocalResponse kWinA1B1LoseA2B1{{Outcome::plus, Outcome::zero}, {Outcome::plus, Outcome::plus}};

}  // namespace

AdversaryStrategy AdversaryStrategy::deterministic(const LocalResponse& response) {
  AdversaryStrategy s;
  s.kind_ = AdversaryKind::deterministic_local;
  s.fixed_ = response;
  return s;
}

AdversaryStrategy AdversaryStrategy::stochastic(const std::array<double, 16>& weights) {
  AdversaryStrategy s;
  s.kind_ = AdversaryKind::stochastic_local;
  double acc = 0.0;
  for (int k = 0; k < 16; ++k) {
    if (!(weights[k] >= 0.0) || !std::isfinite(weights[k])) throw InvalidParameter("weights must be >= 0");
    acc += weights[k];
    s.cumulative_[k] = acc;
  }
  if (!(acc > 0.0)) throw InvalidParameter("weights sum to zero");
  for (auto& c : s.cumulative_) c /= acc;
  return s;
}

AdversaryStrategy AdversaryStrategy::from_joint_table(
    const std::array<std::array<std::array<Outcome, 2>, 2>, 2>& table) {
  LocalResponse r;
  for (int i = 0; i < 2; ++i) {
    if (table[i][0][0] != table[i][1][0]) {
      throw InvalidParameter("nonlocal strategy: Alice's outcome depends on Bob's setting");
    }
    r.alice[i] = table[i][0][0];
  }
  for (int j = 0; j < 2; ++j) {
    if (table[0][j][1] != table[1][j][1]) {
      throw InvalidParameter("nonlocal strategy: Bob's outcome depends on Alice's setting");
    }
    r.bob[j] = table[0][j][1];
  }
  return deterministic(r);
}

AdversaryStrategy AdversaryStrategy::predictability_exploiting(double guess_excess) {
  require_guess_excess(guess_excess);
  AdversaryStrategy s;
  s.kind_ = AdversaryKind::predictability_exploiting;
  s.guess_excess_ = guess_excess;
  return s;
}

AdversaryStrategy AdversaryStrategy::memory(double guess_excess, std::uint64_t switch_at) {
  require_guess_excess(guess_excess);
  AdversaryStrategy s;
  s.kind_ = AdversaryKind::memory_lhv;
  s.guess_excess_ = guess_excess;
  s.switch_at_ = switch_at;
  return s;
}

bool AdversaryStrategy::uses_guess() const {
  return kind_ == AdversaryKind::predictability_exploiting || kind_ == AdversaryKind::memory_lhv;
}

LocalResponse AdversaryStrategy::choose(const AdversaryView& view, CounterRng& gen) const {
  switch (kind_) {
    case AdversaryKind::deterministic_local:
      return fixed_;
    case AdversaryKind::stochastic_local: {
      const double u = gen.uniform();
      const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
      return LocalResponse::from_index(static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative_.begin(), 15)));
    }
    case AdversaryKind::predictability_exploiting:
      return view.guess == std::array<std::uint8_t, 2>{1, 1} ? LocalResponse::all_plus() : LocalResponse::all_zero();
    case AdversaryKind::memory_lhv: {
      if (view.trial < switch_at_) {
        if (view.guess == std::array<std::uint8_t, 2>{1, 1}) return LocalResponse::all_plus();
        const double pace = (0.5 + 2.0 * guess_excess_) * static_cast<double>(view.wins + view.losses);
        return static_cast<double>(view.wins) < pace ? kWinA1B1LoseA1B2 : LocalResponse::all_zero();
      }
      if (!view.has_previous) return LocalResponse::all_zero();
      const int pair = (view.previous.setting_a - 1) * 2 + (view.previous.setting_b - 1);
      switch (pair) {
        case 0: return LocalResponse::all_plus();
        case 1: return kWinA1B1LoseA1B2;
        case 2: return kWinA1B1LoseA2B1;
        default: return LocalResponse::all_zero();
      }
    }
  }
  return LocalResponse::all_zero();
}

double effective_epsilon(const AdversaryStrategy& strategy, const RngModel& rng) {
  return std::max(rng.epsilon(), strategy.uses_guess() ? strategy.guess_excess() : 0.0);
}

namespace {

// Probability that the guess channel reveals the true setting so that,
// combined with a generator bias of `bias`, the best guess succeeds with
// probability 1/2 + target. With x = 2*bias, z = 2*target this is
// (z - x) / (1 - x z); zero when the bias already meets the target.
double reveal_probability(double bias, double target) {
  const double x = 2.0 * bias, z = 2.0 * target;
  if (z <= x) return 0.0;
  return (z - x) / (1.0 - x * z);
}

std::uint8_t guess_setting(std::uint8_t truth, double reveal, CounterRng& gen) {
  if (reveal > 0.0 && gen.uniform() < reveal) return truth;
  return gen.uniform() < 0.5 ? 1 : 2;
}

}  // namespace

CountTable simulate_lhv_run(const AdversaryStrategy& strategy, const RngModel& rng, std::uint64_t n_trials,
                            std::uint64_t seed, const RecordSink& sink, std::vector<LocalResponse>* responses,
                            const TrialTiming& timing) {
  rng.validate();
  timing.validate();
  const double reveal = strategy.uses_guess() ? reveal_probability(rng.epsilon(), strategy.guess_excess()) : 0.0;

  CountTable counts;
  AdversaryView view;
  if (responses) {
    responses->clear();
    responses->reserve(n_trials);
  }
  for (std::uint64_t i = 0; i < n_trials; ++i) {
    TrialRecord rec;
    rec.index = i;
    rec.setting_a = draw_setting(rng, seed, i, RngStream::alice_setting);
    rec.setting_b = draw_setting(rng, seed, i, RngStream::bob_setting);

    view.trial = i;
    if (strategy.uses_guess()) {
      CounterRng ga(seed, i, RngStream::guess_alice);
      CounterRng gb(seed, i, RngStream::guess_bob);
      view.guess = {guess_setting(rec.setting_a, reveal, ga), guess_setting(rec.setting_b, reveal, gb)};
    }
    CounterRng adv(seed, i, RngStream::adversary);
    const LocalResponse lambda = strategy.choose(view, adv);
    if (responses) responses->push_back(lambda);

    const auto out = respond(lambda, rec.setting_a, rec.setting_b);
    rec.outcome_a = out[0];
    rec.outcome_b = out[1];
    CounterRng src(seed, i, RngStream::source);
    if (rec.outcome_a == Outcome::plus) rec.time_a = timing.draw(src);
    if (rec.outcome_b == Outcome::plus) rec.time_b = timing.draw(src);

    counts.add(rec);
    switch (classify_event(rec)) {
      case TrialEvent::win: ++view.wins; break;
      case TrialEvent::loss: ++view.losses; break;
      case TrialEvent::none: break;
    }
    view.previous = rec;
    view.has_previous = true;
    if (sink) sink(rec);
  }
  return counts;
}

}  // namespace bell
