// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--full] [--only N]
//
// --full adds the 3.51e9-trial statistical run to criterion 5.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <thread>

#include <unistd.h>

#include "binomial_oracle.hpp"
#include "bellbench/config.hpp"
#include "bellbench/ingest.hpp"
#include "bellbench/optimize.hpp"
#include "bellbench/qm_model.hpp"
#include "bellbench/records.hpp"
#include "bellbench/spacetime.hpp"
#include "bellbench/stats.hpp"
#include "bellbench/trial_sim.hpp"

using namespace bell;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// 1. Local realist bound.
Verdict lr_bound() {
  double det = -INFINITY;
  for (int k = 0; k < 16; ++k) det = std::max(det, exact_j(LocalResponse::from_index(k)));
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double sto = -INFINITY;
  StochasticLocalModel m;
  for (int s = 0; s < 100'000; ++s) {
    const int h = 1 + s % 8;
    m.weights.assign(h, 0.0);
    m.alice_plus.assign(h, {});
    m.bob_plus.assign(h, {});
    for (int k = 0; k < h; ++k) {
      m.weights[k] = u(gen);
      // half of the models use extreme (deterministic-like) responses
      auto draw = [&] { return s % 2 ? u(gen) : std::round(u(gen)); };
      m.alice_plus[k] = {draw(), draw()};
      m.bob_plus[k] = {draw(), draw()};
    }
    sto = std::max(sto, exact_j(m));
  }
  return {det == 0.0 && sto <= 1e-12,
          "max J deterministic = " + fmt("%g", det) + ", max J over 1e5 stochastic = " + fmt("%.3g", sto)};
}

// 2. Critical efficiency.
Verdict threshold() {
  const auto r = critical_efficiency(1.0, 0.0);
  if (!r.eta) return {false, "no threshold found"};
  return {std::abs(*r.eta - 2.0 / 3.0) <= 0.001, "eta* = " + fmt("%.6f", *r.eta) + " (2/3 +- 0.001)"};
}

// 3. Reference regime optimum.
Verdict regime() {
  const auto p = ExperimentParams::paper_regime();
  const auto res = optimize_settings(p, 1);
  const double jp = predicted_j({paper_state(), paper_angles()}, p);
  const bool in_band = res.j_star >= 2e-5 && res.j_star <= 8e-5;
  return {in_band && jp > 0.0, "j_star = " + fmt("%.4e", res.j_star) + " (band [2e-5, 8e-5]), J(published point) = " +
                                   fmt("%.4e", jp) + ", r* = " + fmt("%.3f", res.state.r)};
}

// 4. Sigma equivalence.
Verdict sigma() {
  const double z = sigma_equivalent(3.74e-31);
  return {std::abs(z - 11.5) <= 0.1, "sigma(3.74e-31) = " + fmt("%.4f", z)};
}

// 5. Statistical regime.
Verdict statistical(bool full) {
  QuantumRunConfig qc;
  qc.rng = RngModel::for_epsilon(2.4e-4);
  const double eps = 2.4e-4;
  const auto counts = simulate_quantum_run(qc, 100'000'000, 2015, {}, threads());
  const double j = j_estimate(counts);
  const auto pv = pvalue(counts, eps);
  bool pass = j > 0.0 && pv.log10_p <= -1.0;
  std::string d = "1e8 trials: J = " + fmt("%.3e", j) + ", log10 p = " + fmt("%.2f", pv.log10_p) + " (<= -1)";
  if (full) {
    const auto big = simulate_quantum_run(qc, 3'510'000'000ULL, 2015, {}, threads());
    const auto pb = pvalue(big, eps);
    const double jb = j_estimate(big);
    pass = pass && jb > 0.0 && pb.log10_p <= -25.0;
    d += "; 3.51e9 trials: J = " + fmt("%.3e", jb) + ", log10 p = " + fmt("%.1f", pb.log10_p) + " (<= -25)";
  } else {
    d += "; 3.51e9-trial run skipped (use --full)";
  }
  return {pass, d};
}

// 6. Validity against local realist adversaries.
Verdict validity() {
  constexpr int kRuns = 10'000;
  constexpr std::uint64_t kTrials = 4000;
  const double eps = 2.4e-4;
  const RngModel rng = RngModel::for_epsilon(eps);

  std::array<double, 16> zero_j{};  // uniform mix of the local responses with J = 0
  for (int k = 0; k < 16; ++k) zero_j[k] = exact_j(LocalResponse::from_index(k)) == 0.0 ? 1.0 : 0.0;
  int win_lose = 0;
  for (int k = 0; k < 16; ++k) {
    const auto r = LocalResponse::from_index(k);
    if (r.alice[0] == bell::Outcome::plus && r.bob[0] == bell::Outcome::plus && exact_j(r) == 0.0 &&
        r.alice[1] == bell::Outcome::zero) {
      win_lose = k;
      break;
    }
  }

  struct Case {
    const char* name;
    AdversaryStrategy strategy;
  };
  const Case cases[] = {
      {"deterministic", AdversaryStrategy::deterministic(LocalResponse::from_index(win_lose))},
      {"stochastic", AdversaryStrategy::stochastic(zero_j)},
      {"memory", AdversaryStrategy::memory(eps, kTrials / 2)},
      {"exploiting", AdversaryStrategy::predictability_exploiting(eps)},
  };
  const double bound01 = 0.01 + 3 * std::sqrt(0.01 / kRuns);
  const double bound10 = 0.1 + 3 * std::sqrt(0.1 / kRuns);
  bool pass = true;
  std::string d;
  for (std::size_t c = 0; c < std::size(cases); ++c) {
    const double e = effective_epsilon(cases[c].strategy, rng);
    int rej01 = 0, rej10 = 0;
    for (int run = 0; run < kRuns; ++run) {
      const auto counts = simulate_lhv_run(cases[c].strategy, rng, kTrials, 1'000'000ULL * (c + 1) + run);
      const double lp = pvalue(counts, e).log10_p;
      rej01 += lp <= -2.0;
      rej10 += lp <= -1.0;
    }
    const double f01 = static_cast<double>(rej01) / kRuns, f10 = static_cast<double>(rej10) / kRuns;
    pass = pass && f01 <= bound01 && f10 <= bound10;
    d += std::string(c ? "; " : "") + cases[c].name + " " + fmt("%.4f", f01) + "/" + fmt("%.4f", f10);
  }
  return {pass, "rejection rate at alpha 0.01/0.1 over 1e4 runs: " + d + " (bounds " + fmt("%.4f", bound01) + "/" +
                    fmt("%.4f", bound10) + ")"};
}

// 7. Binomial tail against exact rationals.
Verdict oracle_tail() {
  double worst = 0.0;
  int cases = 0;
  for (double q : {0.5, adjusted_success_bound(2.4e-4), adjusted_success_bound(0.01), 0.6, 0.75, 0.1, 0.9}) {
    for (unsigned n = 0; n <= 30; ++n) {
      for (unsigned k = 0; k <= n; ++k) {
        const double exact = oracle::log_upper_tail(k, n, q);
        const double got = log_binomial_upper_tail(k, n, q);
        ++cases;
        if (exact == 0.0) {
          if (got != 0.0) worst = INFINITY;
          continue;
        }
        worst = std::max(worst, std::abs(got - exact) / std::abs(exact));
      }
    }
  }
  return {worst <= 1e-12, std::to_string(cases) + " cases, max relative log error = " + fmt("%.2e", worst)};
}

// 8. Space-time margins.
Verdict spacetime() {
  const auto cfg = SpacetimeConfig::from_config(Config::load(BELLBENCH_DATA_DIR "/fig2.cfg"));
  const auto rep = verify_config(cfg);
  bool pass = true;
  for (const auto& s : rep.separations) pass = pass && s.margin.value_ns > 0.0;
  std::string d;
  for (const auto& s : rep.separations) {
    const double target = s.cause == "E" ? 7.0 : 4.0;
    pass = pass && std::abs(s.margin.value_ns - target) <= 2.0;
    d += s.name + " " + fmt("%.2f", s.margin.value_ns) + " +- " + fmt("%.2f", s.margin.sd_ns) + " ns; ";
  }
  d.resize(d.size() - 2);
  return {pass, d};
}

// 9. simulate -> raw traces -> ingest -> analyze.
Verdict round_trip() {
  const fs::path dir = fs::temp_directory_path() / ("bellbench_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const Config cfg = Config::load(BELLBENCH_DATA_DIR "/paper.cfg");
  QuantumRunConfig qc;
  qc.params = params_from_config(cfg);
  qc.state = state_from_config(cfg);
  qc.angles = angles_from_config(cfg);
  qc.rng = rng_from_config(cfg);
  qc.timing = timing_from_config(cfg);
  const std::uint64_t seed = 7, n = 1'000'000;
  const auto opts = IngestOptions::from_config(cfg);

  CountTable direct;
  {
    RecordWriter w(dir / "sim.rec", RecordFormat::binary, {{"seed", seed}});
    RawRunWriter raw(dir / "raw", TraceSynthesis::from_config(cfg), opts, qc.timing, seed);
    direct = simulate_quantum_run(qc, n, seed, [&](const TrialRecord& r) {
      w.write(r);
      raw.write(r);
    });
    raw.close();
  }
  IngestStats st;
  {
    RecordWriter w(dir / "ingested.rec", RecordFormat::binary, {{"seed", seed}});
    st = ingest_directory(dir / "raw", opts, [&](const TrialRecord& r) { w.write(r); });
  }
  const CountTable from_sim = count_records(dir / "sim.rec");
  const CountTable from_ingest = count_records(dir / "ingested.rec");

  bool same_records = true;
  {
    RecordReader a(dir / "sim.rec"), b(dir / "ingested.rec");
    while (true) {
      auto ra = a.next();
      auto rb = b.next();
      if (!ra || !rb) {
        same_records = same_records && !ra && !rb;
        break;
      }
      same_records = same_records && *ra == *rb;
    }
  }
  fs::remove_all(dir);
  const bool pass = from_sim == direct && from_ingest == direct && same_records;
  return {pass, "1e6 trials, " + std::to_string(st.accepted) + " accepted / " + std::to_string(st.triggered) +
                    " triggered traces; count tables " + (from_ingest == direct ? "identical" : "DIFFER") +
                    ", records " + (same_records ? "identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  bool full = false;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--full")) {
      full = true;
    } else if (!std::strcmp(argv[i], "--only") && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--full] [--only N]\n", argv[0]);
      return 2;
    }
  }

  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
    double limit_s;  // wall-clock budget
  };
  const Criterion criteria[] = {
      {"LR bound reproduction", lr_bound, 1.0},
      {"efficiency threshold", threshold, 60.0},
      {"reference regime optimum", regime, 300.0},
      {"sigma equivalence", sigma, 1.0},
      {"statistical regime", [full] { return statistical(full); }, INFINITY},
      {"test validity under LHV adversaries", validity, 1800.0},
      {"binomial tail oracle", oracle_tail, INFINITY},
      {"space-time margins", spacetime, 1.0},
      {"end-to-end round trip", round_trip, INFINITY},
  };

  int failed = 0;
  for (int i = 0; i < static_cast<int>(std::size(criteria)); ++i) {
    if (only && only != i + 1) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > criteria[i].limit_s) {
      o.pass = false;
      o.detail += "; over the " + fmt("%g", criteria[i].limit_s) + " s budget";
    }
    std::printf("[%s] %d. %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str(),
                secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %d criteria failed\n", failed, only ? 1 : static_cast<int>(std::size(criteria)));
  return failed ? 1 : 0;
}
