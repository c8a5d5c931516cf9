#include "bellbench/stats.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "bellbench/error.hpp"

namespace bell {
namespace {

constexpr double kLn10 = std::numbers::ln10;
constexpr double kLnSqrt2Pi = 0.91893853320467274178032973640562;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(n!) - [(n + 1/2) log n - n + log sqrt(2 pi)]
double stirlerr(double n) {
  if (n <= 15.0) {
    const long double ln = n;
    return static_cast<double>(std::lgamma(ln + 1.0L) - (ln + 0.5L) * std::log(ln) + ln -
                               0.91893853320467274178032973640562L);
  }
  constexpr double s0 = 1.0 / 12.0, s1 = 1.0 / 360.0, s2 = 1.0 / 1260.0, s3 = 1.0 / 1680.0, s4 = 1.0 / 1188.0;
  const double nn = n * n;
  return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

// x log(x / m) + m - x without cancellation when x is close to m.
double bd0(double x, double m) {
  if (std::abs(x - m) < 0.1 * (x + m)) {
    const double v = (x - m) / (x + m);
    double s = (x - m) * v;
    double ej = 2.0 * x * v;
    const double v2 = v * v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v2;
      const double s1 = s + ej / (2 * j + 1);
      if (s1 == s) return s1;
      s = s1;
    }
    return s;
  }
  return x * std::log(x / m) + m - x;
}

// Continued fraction x + 1/(x + 2/(x + 3/(x + ...))), for Q(x) = phi(x)/cf.
double mills_continued_fraction(double x) {
  double t = x;
  for (int k = 80; k >= 1; --k) t = x + k / t;
  return t;
}

}  // namespace

double j_estimate(const CountTable& c) {
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (c.trials(i, j) == 0) {
        throw UndefinedEstimate("no trials for setting pair a" + std::to_string(i + 1) + "b" + std::to_string(j + 1));
      }
    }
  }
  auto freq = [&](int i, int j, int pair) {
    return static_cast<double>(c.count(i, j, pair)) / static_cast<double>(c.trials(i, j));
  };
  return freq(0, 0, kPP) - freq(0, 1, kP0) - freq(1, 0, kOP) - freq(1, 1, kPP);
}

WinLoss win_loss(const CountTable& c) {
  return {c.count(0, 0, kPP), c.count(0, 1, kP0) + c.count(1, 0, kOP) + c.count(1, 1, kPP)};
}

double adjusted_success_bound(double epsilon) {
  if (!std::isfinite(epsilon) || epsilon < 0.0 || epsilon >= 0.5) {
    throw InvalidParameter("epsilon must be in [0, 0.5)");
  }
  return 0.5 + 2.0 * epsilon;
}

const char* to_string(PValueMethod m) {
  return m == PValueMethod::azuma ? "azuma" : "binomial_supermartingale";
}

double log_binomial_pmf(std::uint64_t k, std::uint64_t n, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("binomial p must be in [0, 1]");
  if (k > n) return kNegInf;
  const double q = 1.0 - p;
  if (p == 0.0) return k == 0 ? 0.0 : kNegInf;
  if (q == 0.0) return k == n ? 0.0 : kNegInf;
  const double dn = static_cast<double>(n), dk = static_cast<double>(k);
  if (k == 0) return dn * std::log1p(-p);
  if (k == n) return dn * std::log(p);
  const double lc = stirlerr(dn) - stirlerr(dk) - stirlerr(dn - dk) - bd0(dk, dn * p) - bd0(dn - dk, dn * q);
  const double lf = 2.0 * kLnSqrt2Pi + std::log(dk) + std::log1p(-dk / dn);
  return lc - 0.5 * lf;
}

double log_binomial_upper_tail(std::uint64_t k, std::uint64_t n, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("binomial p must be in [0, 1]");
  if (k == 0) return 0.0;
  if (k > n) return kNegInf;
  if (p == 0.0) return kNegInf;
  if (p == 1.0) return 0.0;

  const double dn = static_cast<double>(n);
  const double odds = p / (1.0 - p);
  if (static_cast<double>(k) > dn * p) {
    // Terms decrease from k upward.
    double term = 1.0, sum = 1.0;
    for (std::uint64_t j = k; j < n; ++j) {
      term *= static_cast<double>(n - j) / static_cast<double>(j + 1) * odds;
      sum += term;
      if (term < sum * 1e-17) break;
    }
    return log_binomial_pmf(k, n, p) + std::log(sum);
  }
  // Lower tail P[X <= k-1] summed downward; terms decrease from k-1.
  double term = 1.0, sum = 1.0;
  for (std::uint64_t j = k - 1; j > 0; --j) {
    term *= static_cast<double>(j) / static_cast<double>(n - j + 1) / odds;
    sum += term;
    if (term < sum * 1e-17) break;
  }
  const double lower = std::exp(log_binomial_pmf(k - 1, n, p) + std::log(sum));
  return std::log1p(-std::min(lower, 1.0));
}

PValueResult pvalue(std::uint64_t wins, std::uint64_t losses, double epsilon, PValueMethod method) {
  PValueResult r;
  r.wins = wins;
  r.losses = losses;
  r.q = adjusted_success_bound(epsilon);
  r.method = method;
  const std::uint64_t n = wins + losses;
  if (n == 0 || r.q >= 1.0) {
    r.log10_p = 0.0;
    return r;
  }
  if (method == PValueMethod::binomial_supermartingale) {
    r.log10_p = std::min(0.0, log_binomial_upper_tail(wins, n, r.q) / kLn10);
  } else {
    const double dn = static_cast<double>(n);
    const double excess = static_cast<double>(wins) - r.q * dn;
    r.log10_p = excess > 0.0 ? -2.0 * excess * excess / dn / kLn10 : 0.0;
  }
  return r;
}

PValueResult pvalue(const CountTable& counts, double epsilon, PValueMethod method) {
  const WinLoss wl = win_loss(counts);
  return pvalue(wl.wins, wl.losses, epsilon, method);
}

double log_normal_upper_tail(double z) {
  if (std::isnan(z)) throw InvalidParameter("z is NaN");
  if (z < 25.0) {
    if (z < -8.0) return std::log1p(-0.5 * std::erfc(-z / std::numbers::sqrt2));
    return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
  }
  return -0.5 * z * z - kLnSqrt2Pi - std::log(mills_continued_fraction(z));
}

double sigma_equivalent_log10(double log10_p) {
  if (std::isnan(log10_p) || log10_p > 0.0) throw InvalidParameter("p-value must be in (0, 1]");
  if (log10_p == kNegInf) throw InvalidParameter("p-value must be > 0");
  if (log10_p == 0.0) return kNegInf;
  const double target = log10_p * kLn10;
  if (target > -std::numbers::ln2) {
    // p > 1/2: z < 0, Q(z) = 1 - Q(-z).
    const double complement = -std::expm1(target);
    return -sigma_equivalent(complement);
  }

  const double m = -2.0 * target;
  double z = std::sqrt(std::max(0.0, m - std::log(2.0 * std::numbers::pi) - std::log(std::max(1.0, m))));
  double lo = 0.0, hi = std::sqrt(m) + 2.0;
  for (int it = 0; it < 100; ++it) {
    const double lq = log_normal_upper_tail(z);
    const double g = lq - target;
    if (g > 0.0) lo = z; else hi = z;
    // d/dz log Q(z) = -phi(z) / Q(z)
    const double slope = -std::exp(-0.5 * z * z - kLnSqrt2Pi - lq);
    double next = z - g / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - z) <= 1e-14 * std::max(1.0, z)) return next;
    z = next;
  }
  return z;
}

double sigma_equivalent(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidParameter("p-value must be in (0, 1]");
  return sigma_equivalent_log10(std::log10(p));
}

}  // namespace bell
