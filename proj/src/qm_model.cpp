#include "bellbench/qm_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bellbench/error.hpp"

namespace bell {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void require_probability(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
    throw InvalidParameter(std::string(name) + " must be a probability in [0, 1], got " + std::to_string(v));
  }
}

}  // namespace

std::array<std::complex<double>, 4> state_vector(const EberhardState& state) {
  if (!std::isfinite(state.r)) throw InvalidParameter("state parameter r must be finite");
  // hypot keeps the normalization finite for very large |r|.
  const double norm = std::hypot(1.0, state.r);
  return {0.0, state.r / norm, 1.0 / norm, 0.0};
}

double reduce_polarization_angle(double deg) {
  if (!std::isfinite(deg)) throw InvalidParameter("angle must be finite");
  double x = std::fmod(deg, 180.0);
  if (x <= -90.0) x += 180.0;
  if (x > 90.0) x -= 180.0;
  return x;
}

SettingAngles::SettingAngles(double a1, double a2, double b1, double b2)
    : deg_{reduce_polarization_angle(a1), reduce_polarization_angle(a2), reduce_polarization_angle(b1),
           reduce_polarization_angle(b2)} {}

void ExperimentParams::validate() const {
  require_probability(eta_a, "eta_a");
  require_probability(eta_b, "eta_b");
  require_probability(visibility, "visibility");
  require_probability(background_a, "background_a");
  require_probability(background_b, "background_b");
  if (!std::isfinite(pair_rate) || pair_rate < 0.0) throw InvalidParameter("pair_rate must be >= 0");
  if (!std::isfinite(pulse_rate) || pulse_rate <= 0.0) throw InvalidParameter("pulse_rate must be > 0");
  if (multi_pair_model == MultiPairModel::none && mean_pairs() > 1.0) {
    throw InvalidParameter("multi_pair_model=none needs pair_rate <= pulse_rate");
  }
}

ExperimentParams ExperimentParams::ideal() { return ExperimentParams{}; }

ExperimentParams ExperimentParams::paper_regime() {
  ExperimentParams p;
  p.eta_a = 0.786;
  p.eta_b = 0.762;
  p.visibility = 0.99;
  p.background_a = 1e-6;
  p.background_b = 1e-6;
  p.pair_rate = 3500.0;
  p.pulse_rate = 1e6;
  p.multi_pair_model = MultiPairModel::poissonian;
  return p;
}

ExperimentParams ExperimentParams::paper_regime_pure() {
  ExperimentParams p = paper_regime();
  p.visibility = 1.0;
  p.background_a = 0.0;
  p.background_b = 0.0;
  return p;
}

EberhardState paper_state() { return {-2.9}; }
SettingAngles paper_angles() { return {94.4, 62.4, -6.5, 25.5}; }

OutcomeProbabilityTable outcome_probabilities(const EberhardState& state, const SettingAngles& angles,
                                              const ExperimentParams& params) {
  if (!std::isfinite(state.r)) throw InvalidParameter("state parameter r must be finite");
  params.validate();

  const double r = state.r;
  const double r2 = r * r;
  const double inv_norm2 = 1.0 / (1.0 + r2);
  const double vis = params.visibility;
  const double mu = params.mean_pairs();
  const bool poisson = params.multi_pair_model == MultiPairModel::poissonian;
  const double log_keep_a = std::log1p(-params.background_a);
  const double log_keep_b = std::log1p(-params.background_b);

  // log P(no click from pairs) given a per-pair click probability q.
  auto log_no_click = [&](double q) { return poisson ? -mu * q : std::log1p(-mu * q); };

  OutcomeProbabilityTable table;
  for (int i = 0; i < 2; ++i) {
    const double al = angles.alice_deg(i) * kDeg;
    const double sa = std::sin(al), ca = std::cos(al);
    // Alice's reduced state is V with weight 1/(1+r^2), H with r^2/(1+r^2).
    const double pa = vis * (sa * sa + r2 * ca * ca) * inv_norm2 + (1.0 - vis) * 0.5;
    for (int j = 0; j < 2; ++j) {
      const double be = angles.bob_deg(j) * kDeg;
      const double sb = std::sin(be), cb = std::cos(be);
      const double pb = vis * (cb * cb + r2 * sb * sb) * inv_norm2 + (1.0 - vis) * 0.5;
      const double amp = sa * cb + r * ca * sb;
      const double pab = vis * amp * amp * inv_norm2 + (1.0 - vis) * 0.25;

      const double qa = params.eta_a * pa;
      const double qb = params.eta_b * pb;
      const double qab = params.eta_a * params.eta_b * pab;

      // Complements of the no-click probabilities, kept in expm1 form so the
      // small-mu regime does not cancel.
      const double click_a = -std::expm1(log_keep_a + log_no_click(qa));
      const double click_b = -std::expm1(log_keep_b + log_no_click(qb));
      const double click_any = -std::expm1(log_keep_a + log_keep_b + log_no_click(qa + qb - qab));

      OutcomeProbs& c = table.at(i, j);
      c.pp = std::max(0.0, click_a + click_b - click_any);
      c.p0 = std::max(0.0, click_any - click_b);
      c.op = std::max(0.0, click_any - click_a);
      c.oo = 1.0 - click_any;
    }
  }
  return table;
}

double j_value(const OutcomeProbabilityTable& t) {
  return t.at(0, 0).pp - t.at(0, 1).p0 - t.at(1, 0).op - t.at(1, 1).pp;
}

const char* to_string(MultiPairModel m) { return m == MultiPairModel::poissonian ? "poissonian" : "none"; }

ExperimentParams params_from_config(const Config& cfg, const ExperimentParams& defaults) {
  ExperimentParams p = defaults;
  p.eta_a = cfg.get_double("eta_a", p.eta_a);
  p.eta_b = cfg.get_double("eta_b", p.eta_b);
  p.visibility = cfg.get_double("visibility", p.visibility);
  p.background_a = cfg.get_double("background_a", p.background_a);
  p.background_b = cfg.get_double("background_b", p.background_b);
  p.pair_rate = cfg.get_double("pair_rate", p.pair_rate);
  p.pulse_rate = cfg.get_double("pulse_rate", p.pulse_rate);
  const std::string model = cfg.get_string("multi_pair_model", to_string(p.multi_pair_model));
  if (model == "none") {
    p.multi_pair_model = MultiPairModel::none;
  } else if (model == "poissonian") {
    p.multi_pair_model = MultiPairModel::poissonian;
  } else {
    throw InvalidParameter("multi_pair_model must be 'none' or 'poissonian', got '" + model + "'");
  }
  p.validate();
  return p;
}

EberhardState state_from_config(const Config& cfg, const EberhardState& fallback) {
  EberhardState s{cfg.get_double("state.r", fallback.r)};
  if (!std::isfinite(s.r)) throw InvalidParameter("state.r must be finite");
  return s;
}

SettingAngles angles_from_config(const Config& cfg, const SettingAngles& fallback) {
  return {cfg.get_double("angles.a1", fallback.a1()), cfg.get_double("angles.a2", fallback.a2()),
          cfg.get_double("angles.b1", fallback.b1()), cfg.get_double("angles.b2", fallback.b2())};
}

}  // namespace bell
