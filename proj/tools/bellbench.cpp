// bellbench: command-line front end.
//
// Exit status: 0 success, 1 audit or check failed, 2 usage error,
// 3 invalid input or parameters, 4 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bellbench/config.hpp"
#include "bellbench/error.hpp"
#include "bellbench/ingest.hpp"
#include "bellbench/optimize.hpp"
#include "bellbench/qm_model.hpp"
#include "bellbench/records.hpp"
#include "bellbench/spacetime.hpp"
#include "bellbench/stats.hpp"
#include "bellbench/trial_sim.hpp"
#include "bellbench/version.hpp"

namespace {

using nlohmann::json;

constexpr int kExitFailedCheck = 1;
constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitRuntime = 4;

struct Common {
  std::string config_path;
  std::uint64_t seed = 1;
  std::string output;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "key = value configuration file");
  sub->add_option("--seed", c.seed, "random seed")->capture_default_str();
  sub->add_option("--output", c.output, "output file");
}

bell::Config load_config(const Common& c) {
  return c.config_path.empty() ? bell::Config{} : bell::Config::load(c.config_path);
}

json metadata(const char* command, const Common& c, const bell::Config& cfg) {
  return {{"tool", "bellbench"},
          {"version", bell::kVersion},
          {"command", command},
          {"seed", c.seed},
          {"config", c.config_path},
          {"config_hash", cfg.content_hash()}};
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

json angles_json(const bell::SettingAngles& a) {
  return {{"a1", a.a1()}, {"a2", a.a2()}, {"b1", a.b1()}, {"b2", a.b2()}};
}

json params_json(const bell::ExperimentParams& p) {
  return {{"eta_a", p.eta_a},
          {"eta_b", p.eta_b},
          {"visibility", p.visibility},
          {"background_a", p.background_a},
          {"background_b", p.background_b},
          {"pair_rate", p.pair_rate},
          {"pulse_rate", p.pulse_rate},
          {"multi_pair_model", bell::to_string(p.multi_pair_model)}};
}

// ---------------------------------------------------------------------------

int run_model(const Common& c) {
  const bell::Config cfg = load_config(c);
  const auto params = bell::params_from_config(cfg);
  const auto state = bell::state_from_config(cfg);
  const auto angles = bell::angles_from_config(cfg);
  const auto table = bell::outcome_probabilities(state, angles, params);
  const double j = bell::j_value(table);

  std::cout << "r = " << state.r << ", mean pairs per trial = " << params.mean_pairs() << "\n";
  json cells = json::object();
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) {
      const auto& p = table.at(i, k);
      const std::string name = "a" + std::to_string(i + 1) + "b" + std::to_string(k + 1);
      std::cout << "  " << name << ": p++ " << fmt("%.6e", p.pp) << "  p+0 " << fmt("%.6e", p.p0) << "  p0+ "
                << fmt("%.6e", p.op) << "  p00 " << fmt("%.9f", p.oo) << "\n";
      cells[name] = {{"pp", p.pp}, {"p0", p.p0}, {"op", p.op}, {"oo", p.oo}};
    }
  }
  std::cout << "J = " << fmt("%.6e", j) << "\n";
  if (!c.output.empty()) {
    write_json(c.output, {{"metadata", metadata("model", c, cfg)},
                          {"params", params_json(params)},
                          {"r", state.r},
                          {"angles", angles_json(angles)},
                          {"probabilities", cells},
                          {"J", j}});
  }
  return 0;
}

int run_optimize(const Common& c, int starts, bool threshold) {
  const bell::Config cfg = load_config(c);
  const auto params = bell::params_from_config(cfg);
  json out{{"metadata", metadata("optimize", c, cfg)}, {"params", params_json(params)}};

  if (threshold) {
    bell::ThresholdOptions topts;
    topts.seed = c.seed;
    topts.starts = starts;
    if (params.background_a != params.background_b) {
      throw bell::InvalidParameter("threshold search needs background_a == background_b");
    }
    const auto res = bell::critical_efficiency(params.visibility, params.background_a, topts);
    std::cout << "visibility " << params.visibility << ", background " << params.background_a << "\n";
    if (res.eta) {
      std::cout << "critical efficiency = " << fmt("%.6f", *res.eta) << "\n";
    } else {
      std::cout << "no violation at unit efficiency (max J = " << fmt("%.3e", res.j_at_unit_efficiency) << ")\n";
    }
    out["critical_efficiency"] = res.eta ? json(*res.eta) : json(nullptr);
    out["j_at_unit_efficiency"] = res.j_at_unit_efficiency;
    out["bisection_steps"] = res.bisection_steps;
  } else {
    bell::OptimizeOptions opts;
    opts.starts = starts;
    const auto res = bell::optimize_settings(params, c.seed, opts);
    std::cout << "starts " << res.starts << " (failed " << res.failed_starts << ")\n"
              << "J* = " << fmt("%.6e", res.j_star) << "\n"
              << "r = " << fmt("%.4f", res.state.r) << "\n"
              << "a1 = " << fmt("%.2f", res.angles.a1()) << "  a2 = " << fmt("%.2f", res.angles.a2())
              << "  b1 = " << fmt("%.2f", res.angles.b1()) << "  b2 = " << fmt("%.2f", res.angles.b2()) << " deg\n";
    out["j_star"] = res.j_star;
    out["r"] = res.state.r;
    out["angles"] = angles_json(res.angles);
    out["starts"] = res.starts;
    out["failed_starts"] = res.failed_starts;
    out["trace"] = res.trace;
  }
  if (!c.output.empty()) write_json(c.output, out);
  return 0;
}

struct SimulateArgs {
  std::uint64_t trials = 0;
  std::string format = "binary";
  std::string source = "quantum";
  int response = 0;
  std::uint64_t switch_at = 0;
  double guess_excess = -1.0;
  unsigned threads = 1;
  std::string raw_dir;
};

int run_simulate(const Common& c, const SimulateArgs& a) {
  const bell::Config cfg = load_config(c);
  if (c.output.empty() && a.raw_dir.empty()) throw bell::InvalidParameter("simulate needs --output and/or --raw-dir");
  const bell::RngModel rng = bell::rng_from_config(cfg);
  const bell::TrialTiming timing = bell::timing_from_config(cfg);

  json meta = metadata("simulate", c, cfg);
  meta["trials"] = a.trials;
  meta["source"] = a.source;
  meta["rng_epsilon"] = rng.epsilon();

  std::optional<bell::RecordWriter> writer;
  if (!c.output.empty()) {
    const auto format = a.format == "text" ? bell::RecordFormat::text : bell::RecordFormat::binary;
    writer.emplace(c.output, format, meta);
  }
  std::optional<bell::RawRunWriter> raw;
  if (!a.raw_dir.empty()) {
    raw.emplace(a.raw_dir, bell::TraceSynthesis::from_config(cfg), bell::IngestOptions::from_config(cfg), timing,
                c.seed);
  }
  bell::RecordSink sink = [&](const bell::TrialRecord& rec) {
    if (writer) writer->write(rec);
    if (raw) raw->write(rec);
  };

  bell::CountTable counts;
  if (a.source == "quantum") {
    bell::QuantumRunConfig qc;
    qc.params = bell::params_from_config(cfg);
    qc.state = bell::state_from_config(cfg);
    qc.angles = bell::angles_from_config(cfg);
    qc.rng = rng;
    qc.timing = timing;
    counts = bell::simulate_quantum_run(qc, a.trials, c.seed, sink, a.threads);
  } else {
    const double g = a.guess_excess >= 0.0 ? a.guess_excess : rng.epsilon();
    bell::AdversaryStrategy strategy = bell::AdversaryStrategy::deterministic(bell::LocalResponse::from_index(0));
    if (a.source == "deterministic") {
      if (a.response < 0 || a.response > 15) throw bell::InvalidParameter("--response must be in 0..15");
      strategy = bell::AdversaryStrategy::deterministic(bell::LocalResponse::from_index(a.response));
    } else if (a.source == "exploit") {
      strategy = bell::AdversaryStrategy::predictability_exploiting(g);
    } else if (a.source == "memory") {
      strategy = bell::AdversaryStrategy::memory(g, a.switch_at ? a.switch_at : a.trials / 2);
    }
    counts = bell::simulate_lhv_run(strategy, rng, a.trials, c.seed, sink, nullptr, timing);
    std::cout << "assumed epsilon for analysis: " << bell::effective_epsilon(strategy, rng) << "\n";
  }
  if (writer) writer->close();
  if (raw) raw->close();

  std::cout << "trials " << counts.total() << "\n";
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) {
      std::cout << "  a" << i + 1 << "b" << k + 1 << ": n " << counts.trials(i, k) << "  ++ "
                << counts.count(i, k, bell::kPP) << "  +0 " << counts.count(i, k, bell::kP0) << "  0+ "
                << counts.count(i, k, bell::kOP) << "\n";
    }
  }
  return 0;
}

int run_analyze(const Common& c, const std::string& input, std::optional<double> epsilon,
                const std::string& method_name) {
  const bell::Config cfg = load_config(c);
  if (!epsilon) throw bell::InvalidParameter("analyze needs --epsilon");
  bell::PValueMethod method = bell::PValueMethod::binomial_supermartingale;
  if (method_name == "azuma") method = bell::PValueMethod::azuma;

  bell::RecordReader reader(input);
  bell::CountTable counts;
  while (auto rec = reader.next()) counts.add(*rec);

  const double j = bell::j_estimate(counts);
  const auto pv = bell::pvalue(counts, *epsilon, method);
  const double sigma = bell::sigma_equivalent_log10(pv.log10_p);

  std::cout << "trials " << counts.total() << "\n"
            << "J = " << fmt("%.6e", j) << "\n"
            << "K = " << pv.wins << ", L = " << pv.losses << ", q = " << fmt("%.6f", pv.q) << "\n"
            << "log10 p = " << fmt("%.4f", pv.log10_p) << " (" << bell::to_string(method) << ")\n"
            << "sigma equivalent = " << fmt("%.3f", sigma) << "\n";
  if (!c.output.empty()) {
    json m = metadata("analyze", c, cfg);
    m["input"] = input;
    m["input_metadata"] = reader.metadata();
    write_json(c.output, {{"metadata", m},
                          {"counts", counts.to_json()},
                          {"J", j},
                          {"epsilon", *epsilon},
                          {"K", pv.wins},
                          {"L", pv.losses},
                          {"q", pv.q},
                          {"method", bell::to_string(method)},
                          {"log10_p", pv.log10_p},
                          {"sigma", sigma}});
  }
  return 0;
}

int run_spacetime(const Common& c, std::optional<double> k) {
  if (c.config_path.empty()) throw bell::InvalidParameter("spacetime needs --config");
  const bell::Config cfg = load_config(c);
  auto sc = bell::SpacetimeConfig::from_config(cfg);
  if (k) sc.k = *k;
  const auto report = bell::verify_config(sc);
  std::cout << report.to_text();
  if (!c.output.empty()) {
    json j = report.to_json();
    j["metadata"] = metadata("spacetime", c, cfg);
    write_json(c.output, j);
  }
  return report.passed() ? 0 : kExitFailedCheck;
}

int run_ingest(const Common& c, const std::string& raw_dir, const std::string& format) {
  if (c.output.empty()) throw bell::InvalidParameter("ingest needs --output");
  const bell::Config cfg = load_config(c);
  const auto opts = bell::IngestOptions::from_config(cfg);
  json meta = metadata("ingest", c, cfg);
  meta["raw_dir"] = raw_dir;
  bell::RecordWriter writer(c.output, format == "text" ? bell::RecordFormat::text : bell::RecordFormat::binary, meta);
  const auto st = bell::ingest_directory(raw_dir, opts, [&](const bell::TrialRecord& r) { writer.write(r); });
  writer.close();
  std::cout << "trials " << st.trials << "\n"
            << "traces alice " << st.traces_a << ", bob " << st.traces_b << "\n"
            << "triggered " << st.triggered << ", accepted " << st.accepted << "\n";
  if (st.hits_out_of_range) std::cout << "warning: " << st.hits_out_of_range << " detections outside the run\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bell test workbench: model, optimize, simulate, analyze, audit and ingest."};
  app.set_version_flag("--version", bell::kVersion);
  app.require_subcommand(1);

  Common common;

  auto* model = app.add_subcommand("model", "outcome probabilities and J at the configured point");
  add_common(model, common);

  int starts = 20;
  bool threshold = false;
  auto* optimize = app.add_subcommand("optimize", "maximize J over state and angles");
  add_common(optimize, common);
  optimize->add_option("--starts", starts, "random starts")->capture_default_str()->check(CLI::PositiveNumber);
  optimize->add_flag("--threshold", threshold, "find the critical symmetric efficiency instead");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "generate a trial record stream");
  add_common(simulate, common);
  simulate->add_option("--trials", sim.trials, "number of trials")->required();
  simulate->add_option("--format", sim.format, "record format")->check(CLI::IsMember({"binary", "text"}))
      ->capture_default_str();
  simulate->add_option("--source", sim.source, "trial source")
      ->check(CLI::IsMember({"quantum", "deterministic", "exploit", "memory"}))
      ->capture_default_str();
  simulate->add_option("--response", sim.response, "deterministic response index 0..15");
  simulate->add_option("--switch-at", sim.switch_at, "memory adversary switch trial (default: half way)");
  simulate->add_option("--guess-excess", sim.guess_excess, "adversary guess excess (default: rng epsilon)");
  simulate->add_option("--threads", sim.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--raw-dir", sim.raw_dir, "also write synthetic traces and settings here");

  std::string input;
  std::optional<double> epsilon;
  std::string method = "binomial";
  auto* analyze = app.add_subcommand("analyze", "J, p-value and sigma equivalent of a record file");
  add_common(analyze, common);
  analyze->add_option("--input", input, "record file")->required();
  analyze->add_option("--epsilon", epsilon, "setting predictability bound")->required();
  analyze->add_option("--method", method, "p-value method")->check(CLI::IsMember({"binomial", "azuma"}))
      ->capture_default_str();

  std::optional<double> k;
  auto* spacetime = app.add_subcommand("spacetime", "audit light-cone margins");
  add_common(spacetime, common);
  spacetime->add_option("--k", k, "required margin in standard deviations (overrides audit.k)");

  std::string raw_dir;
  std::string ingest_format = "binary";
  auto* ingest = app.add_subcommand("ingest", "classify traces and assemble trial records");
  add_common(ingest, common);
  ingest->add_option("--raw-dir", raw_dir, "directory with *.traces and *.settings")->required();
  ingest->add_option("--format", ingest_format, "record format")->check(CLI::IsMember({"binary", "text"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*model) return run_model(common);
    if (*optimize) return run_optimize(common, starts, threshold);
    if (*simulate) return run_simulate(common, sim);
    if (*analyze) return run_analyze(common, input, epsilon, method);
    if (*spacetime) return run_spacetime(common, k);
    if (*ingest) return run_ingest(common, raw_dir, ingest_format);
  } catch (const bell::InvalidParameter& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const bell::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const bell::UndefinedEstimate& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
