#pragma once

#include <cstdint>
#include <string>

#include "bellbench/records.hpp"

namespace bell {

/// Plug-in J from conditional relative frequencies. Throws UndefinedEstimate
/// if any setting pair has no trials.
double j_estimate(const CountTable& counts);

struct WinLoss {
  std::uint64_t wins = 0;    // K: "++" at a1b1
  std::uint64_t losses = 0;  // L: "+0" at a1b2, "0+" at a2b1, "++" at a2b2
};

WinLoss win_loss(const CountTable& counts);

/// Upper bound on a trial's conditional win probability given that it is a
/// win or a loss, for a local realist source whose settings are each
/// predictable with probability at most 1/2 + epsilon: q = 1/2 + 2*epsilon.
///
/// For a deterministic local response with W winning and L >= W losing
/// setting pairs (J <= 0 forces W <= L, and W <= 1), each setting pair
/// has probability in [(1/2 - eps)^2, (1/2 + eps)^2], so the ratio is at
/// most (1/2+eps)^2 / ((1/2+eps)^2 + (1/2-eps)^2) = 1/2 + 2 eps/(1 + 4 eps^2).
/// The bound survives mixing over responses and conditioning on the past.
double adjusted_success_bound(double epsilon);

enum class PValueMethod { binomial_supermartingale, azuma };

const char* to_string(PValueMethod m);

struct PValueResult {
  double log10_p = 0.0;
  std::uint64_t wins = 0;    // K
  std::uint64_t losses = 0;  // L
  double q = 0.5;
  PValueMethod method = PValueMethod::binomial_supermartingale;
};

/// Local-realism p-value from win/loss counts.
///
/// binomial_supermartingale: P[Binomial(K+L, q) >= K], in log space.
/// azuma: exp(-2 (K - q n)^2 / n) for K > q n, else 1 (Hoeffding-Azuma on
/// the bounded increments win - q*[win or loss]); always at least the
/// binomial value.
PValueResult pvalue(std::uint64_t wins, std::uint64_t losses, double epsilon,
                    PValueMethod method = PValueMethod::binomial_supermartingale);

PValueResult pvalue(const CountTable& counts, double epsilon,
                    PValueMethod method = PValueMethod::binomial_supermartingale);

/// Natural log of the Binomial(n, p) probability of k, accurate in relative
/// terms for n up to 2^53 (saddle-point form with Stirling remainders).
double log_binomial_pmf(std::uint64_t k, std::uint64_t n, double p);

/// Natural log of P[Binomial(n, p) >= k].
double log_binomial_upper_tail(std::uint64_t k, std::uint64_t n, double p);

/// Natural log of the standard normal upper tail Q(z).
double log_normal_upper_tail(double z);

/// z with Q(z) = p, for p in (0, 1]. p = 1 gives -infinity.
double sigma_equivalent(double p);

/// Same, from log10 p (<= 0); works far below the double range of p.
double sigma_equivalent_log10(double log10_p);

}  // namespace bell
