#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "bellbench/config.hpp"
#include "bellbench/error.hpp"
#include "bellbench/qm_model.hpp"

using namespace bell;

namespace {

constexpr double kDeg = M_PI / 180.0;

Eigen::Matrix4d kron(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b) {
  Eigen::Matrix4d m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) m.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return m;
}

Eigen::Matrix2d projector(double deg) {
  Eigen::Vector2d v(std::cos(deg * kDeg), std::sin(deg * kDeg));
  return v * v.transpose();
}

// Single pair per trial, no background: explicit density matrix and POVM.
OutcomeProbs dense_oracle(double r, double alpha, double beta, double eta_a, double eta_b, double vis) {
  Eigen::Vector4d psi(0.0, r, 1.0, 0.0);  // HH, HV, VH, VV
  psi /= psi.norm();
  const Eigen::Matrix4d rho = vis * psi * psi.transpose() + (1.0 - vis) * Eigen::Matrix4d::Identity() / 4.0;
  const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d ca = eta_a * projector(alpha), cb = eta_b * projector(beta);
  return {(rho * kron(ca, cb)).trace(), (rho * kron(ca, id - cb)).trace(), (rho * kron(id - ca, cb)).trace(),
          (rho * kron(id - ca, id - cb)).trace()};
}

ExperimentParams single_pair(double ea, double eb, double vis) {
  ExperimentParams p;
  p.eta_a = ea;
  p.eta_b = eb;
  p.visibility = vis;
  return p;
}

}  // namespace

TEST_CASE("state vector amplitudes") {
  auto s0 = state_vector({0.0});
  CHECK(std::abs(s0[2] - 1.0) < 1e-15);
  CHECK(std::abs(s0[0]) + std::abs(s0[1]) + std::abs(s0[3]) == 0.0);

  auto s1 = state_vector({1.0});
  CHECK(std::abs(s1[1].real() - M_SQRT1_2) < 1e-15);
  CHECK(std::abs(s1[2].real() - M_SQRT1_2) < 1e-15);

  auto s = state_vector({-2.9});
  // 1/sqrt(9.41) and -2.9/sqrt(9.41), 30-digit reference
  CHECK(std::abs(s[1].real() - -0.945372981626272) < 1e-14);
  CHECK(std::abs(s[2].real() - 0.325990683319404) < 1e-14);
  CHECK(std::norm(s[1]) + std::norm(s[2]) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(state_vector({std::nan("")}), InvalidParameter);
}

TEST_CASE("maximally entangled ideal correlations") {
  const auto params = ExperimentParams::ideal();
  for (double a : {0.0, 10.0, 33.0, 75.0}) {
    for (double b : {0.0, 20.0, 45.0, 90.0}) {
      const auto t = outcome_probabilities({-1.0}, {a, a, b, b}, params);
      const double expect = 0.5 * std::pow(std::sin((a - b) * kDeg), 2);
      CHECK(std::abs(t.at(0, 0).pp - expect) < 1e-14);
    }
  }
  const auto same = outcome_probabilities({-1.0}, {30, 30, 30, 30}, params);
  CHECK(std::abs(same.at(0, 0).pp) < 1e-15);
}

TEST_CASE("no detections when Alice's efficiency is zero") {
  auto p = ExperimentParams::paper_regime();
  p.eta_a = 0.0;
  p.background_a = 0.0;
  const auto t = outcome_probabilities(paper_state(), paper_angles(), p);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(t.at(i, j).pp == 0.0);
      CHECK(t.at(i, j).p0 == 0.0);
    }
}

TEST_CASE("j_value arithmetic") {
  OutcomeProbabilityTable t{};
  CHECK(j_value(t) == 0.0);
  t.at(0, 0).pp = 0.1;
  t.at(0, 1).p0 = 0.02;
  t.at(1, 0).op = 0.02;
  t.at(1, 1).pp = 0.02;
  CHECK(j_value(t) == doctest::Approx(0.04).epsilon(1e-15));
}

TEST_CASE("published operating point violates") {
  const double j = j_value(outcome_probabilities(paper_state(), paper_angles(), ExperimentParams::paper_regime()));
  CHECK(j > 0.0);
  CHECK(j > 2e-5);
  CHECK(j < 8e-5);
  const double jp = j_value(outcome_probabilities(paper_state(), paper_angles(), ExperimentParams::paper_regime_pure()));
  CHECK(jp == doctest::Approx(3.93e-5).epsilon(0.01));
}

TEST_CASE("dense projector oracle on random single-pair samples") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> ang(-180.0, 180.0), eta(0.0, 1.0), vis(0.0, 1.0), lr(-2.5, 2.5);
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    const double r = (s % 2 ? -1.0 : 1.0) * std::pow(10.0, lr(gen) / 2.5);
    const SettingAngles angles(ang(gen), ang(gen), ang(gen), ang(gen));
    const auto p = single_pair(eta(gen), eta(gen), s < 50 ? 1.0 : vis(gen));
    const auto t = outcome_probabilities({r}, angles, p);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const auto o = dense_oracle(r, angles.alice_deg(i), angles.bob_deg(j), p.eta_a, p.eta_b, p.visibility);
        const auto& c = t.at(i, j);
        worst = std::max({worst, std::abs(c.pp - o.pp), std::abs(c.p0 - o.p0), std::abs(c.op - o.op),
                          std::abs(c.oo - o.oo)});
      }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("Poissonian pairs match an explicit sum over pair numbers") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0), ang(0.0, 180.0);
  for (int s = 0; s < 20; ++s) {
    ExperimentParams p;
    p.eta_a = u(gen);
    p.eta_b = u(gen);
    p.visibility = u(gen);
    p.background_a = 1e-3 * u(gen);
    p.background_b = 1e-3 * u(gen);
    p.pair_rate = 2.0 * u(gen);
    p.pulse_rate = 1.0;
    p.multi_pair_model = MultiPairModel::poissonian;
    const double r = -3.0 * u(gen);
    const SettingAngles angles(ang(gen), ang(gen), ang(gen), ang(gen));
    const auto t = outcome_probabilities({r}, angles, p);
    const double mu = p.mean_pairs();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const auto o = dense_oracle(r, angles.alice_deg(i), angles.bob_deg(j), p.eta_a, p.eta_b, p.visibility);
        // no click on A, on B, on both, for n independent pairs: (.)^n
        const double na1 = o.op + o.oo, nb1 = o.p0 + o.oo, n001 = o.oo;
        double na = 0, nb = 0, n00 = 0, w = std::exp(-mu);
        for (int n = 0; n < 80; ++n) {
          na += w * std::pow(na1, n);
          nb += w * std::pow(nb1, n);
          n00 += w * std::pow(n001, n);
          w *= mu / (n + 1);
        }
        na *= 1 - p.background_a;
        nb *= 1 - p.background_b;
        n00 *= (1 - p.background_a) * (1 - p.background_b);
        const auto& c = t.at(i, j);
        CHECK(std::abs(c.oo - n00) < 1e-12);
        CHECK(std::abs(c.p0 - (nb - n00)) < 1e-12);
        CHECK(std::abs(c.op - (na - n00)) < 1e-12);
        CHECK(std::abs(c.pp - (1 - na - nb + n00)) < 1e-12);
      }
  }
}

TEST_CASE("normalization and no-signaling over random parameters") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0), ang(-360.0, 360.0);
  for (int s = 0; s < 500; ++s) {
    ExperimentParams p;
    p.eta_a = u(gen);
    p.eta_b = u(gen);
    p.visibility = u(gen);
    p.background_a = 0.01 * u(gen);
    p.background_b = 0.01 * u(gen);
    p.multi_pair_model = s % 2 ? MultiPairModel::poissonian : MultiPairModel::none;
    p.pair_rate = s % 2 ? 5.0 * u(gen) : u(gen);
    const double r = (u(gen) - 0.5) * 20.0;
    const auto t = outcome_probabilities({r}, {ang(gen), ang(gen), ang(gen), ang(gen)}, p);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        CHECK(std::abs(t.at(i, j).sum() - 1.0) <= 1e-12);
        CHECK(t.at(i, j).pp >= 0.0);
        CHECK(t.at(i, j).p0 >= 0.0);
        CHECK(t.at(i, j).op >= 0.0);
      }
      CHECK(std::abs(t.at(i, 0).alice_plus() - t.at(i, 1).alice_plus()) <= 1e-12);
      CHECK(std::abs(t.at(0, i).bob_plus() - t.at(1, i).bob_plus()) <= 1e-12);
    }
  }
}

TEST_CASE("J does not increase as visibility drops") {
  auto p = ExperimentParams::paper_regime();
  double prev = INFINITY;
  for (int k = 100; k >= 0; --k) {
    p.visibility = k / 100.0;
    const double j = j_value(outcome_probabilities(paper_state(), paper_angles(), p));
    CHECK(j <= prev + 1e-18);
    prev = j;
  }
  // Maximally entangled state at its optimal angles, three efficiencies.
  for (double eta : {1.0, 0.9, 0.8}) {
    auto q = single_pair(eta, eta, 1.0);
    const SettingAngles ch(22.5, -22.5, -90.0, -45.0);
    REQUIRE(j_value(outcome_probabilities({-1.0}, ch, ExperimentParams::ideal())) > 0.2);
    prev = INFINITY;
    for (int k = 100; k >= 0; --k) {
      q.visibility = k / 100.0;
      const double j = j_value(outcome_probabilities({-1.0}, ch, q));
      CHECK(j <= prev + 1e-15);
      prev = j;
    }
  }
}

TEST_CASE("product states never violate") {
  for (double eta : {1.0, 0.8, 0.5}) {
    const auto p = single_pair(eta, eta, 1.0);
    double worst = -INFINITY;
    for (double a1 = 0; a1 < 180; a1 += 15)
      for (double a2 = 0; a2 < 180; a2 += 15)
        for (double b1 = 0; b1 < 180; b1 += 15)
          for (double b2 = 0; b2 < 180; b2 += 15)
            worst = std::max(worst, j_value(outcome_probabilities({0.0}, {a1, a2, b1, b2}, p)));
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("angles are reduced to one polarization period") {
  CHECK(reduce_polarization_angle(94.4) == doctest::Approx(-85.6));
  CHECK(reduce_polarization_angle(90.0) == doctest::Approx(90.0));
  CHECK(reduce_polarization_angle(-90.0) == doctest::Approx(90.0));
  CHECK(reduce_polarization_angle(270.0) == doctest::Approx(90.0));
  const auto p = ExperimentParams::paper_regime();
  const double j1 = j_value(outcome_probabilities(paper_state(), {94.4, 62.4, -6.5, 25.5}, p));
  const double j2 = j_value(outcome_probabilities(paper_state(), {94.4 - 180, 62.4 + 360, -6.5 + 180, 25.5}, p));
  CHECK(j1 == doctest::Approx(j2).epsilon(1e-12));
}

TEST_CASE("parameter validation") {
  auto p = ExperimentParams::ideal();
  p.eta_a = 1.5;
  CHECK_THROWS_AS(p.validate(), InvalidParameter);
  p = ExperimentParams::ideal();
  p.pair_rate = 2.0;  // more than one pair per trial under `none`
  CHECK_THROWS_AS(p.validate(), InvalidParameter);
  p.multi_pair_model = MultiPairModel::poissonian;
  CHECK_NOTHROW(p.validate());
  p.visibility = -0.1;
  CHECK_THROWS_AS(outcome_probabilities({-1}, {0, 0, 0, 0}, p), InvalidParameter);
}

TEST_CASE("parameters from a configuration file") {
  const auto cfg = Config::parse(
      "eta_a = 0.7\n eta_b = 0.6 # trailing\nmulti_pair_model = none\npair_rate = 0.5\npulse_rate=1\n"
      "state.r = -3\nangles.a1 = 10\n");
  const auto p = params_from_config(cfg);
  CHECK(p.eta_a == 0.7);
  CHECK(p.eta_b == 0.6);
  CHECK(p.multi_pair_model == MultiPairModel::none);
  CHECK(p.visibility == 0.99);  // default from the reference regime
  CHECK(state_from_config(cfg).r == -3.0);
  CHECK(angles_from_config(cfg).a1() == 10.0);
  CHECK(angles_from_config(cfg).a2() == doctest::Approx(62.4));
  CHECK_THROWS_AS(params_from_config(Config::parse("multi_pair_model = lots\n")), InvalidParameter);
}
