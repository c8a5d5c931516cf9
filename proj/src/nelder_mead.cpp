#include "bellbench/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bell {
namespace {

double sanitize(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); }

struct Simplex {
  std::vector<std::vector<double>> pts;
  std::vector<double> vals;
};

}  // namespace

NelderMeadResult nelder_mead_minimize(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> x0, const NelderMeadOptions& opts,
                                      const std::function<void(double)>& on_iteration) {
  const std::size_t n = x0.size();
  NelderMeadResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    return sanitize(f(x));
  };

  std::vector<double> best_x = x0;
  double best_f = eval(x0);

  for (int round = 0; round <= opts.restarts; ++round) {
    Simplex s;
    s.pts.push_back(best_x);
    s.vals.push_back(best_f);
    const double step = round == 0 ? opts.initial_step : opts.initial_step * 0.05;
    for (std::size_t k = 0; k < n; ++k) {
      auto p = best_x;
      p[k] += step;
      s.vals.push_back(eval(p));
      s.pts.push_back(std::move(p));
    }

    std::vector<std::size_t> order(n + 1);
    bool round_converged = false;
    while (res.evaluations < opts.max_evaluations) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.vals[a] < s.vals[b]; });
      const auto ib = order.front(), iw = order.back(), isw = order[n - 1];
      ++res.iterations;
      if (on_iteration) on_iteration(s.vals[ib]);

      double spread = 0.0;
      for (std::size_t v = 0; v <= n; ++v) {
        for (std::size_t k = 0; k < n; ++k) spread = std::max(spread, std::abs(s.pts[v][k] - s.pts[ib][k]));
      }
      const double fspread = s.vals[iw] - s.vals[ib];
      if (spread <= opts.x_tolerance || (std::isfinite(fspread) && fspread <= opts.f_tolerance &&
                                         spread <= opts.x_tolerance * 1e4)) {
        round_converged = true;
        break;
      }

      std::vector<double> centroid(n, 0.0);
      for (std::size_t v = 0; v <= n; ++v) {
        if (v == iw) continue;
        for (std::size_t k = 0; k < n; ++k) centroid[k] += s.pts[v][k] / static_cast<double>(n);
      }
      auto along = [&](double t) {
        std::vector<double> p(n);
        for (std::size_t k = 0; k < n; ++k) p[k] = centroid[k] + t * (s.pts[iw][k] - centroid[k]);
        return p;
      };

      auto xr = along(-1.0);
      const double fr = eval(xr);
      if (fr < s.vals[ib]) {
        auto xe = along(-2.0);
        const double fe = eval(xe);
        if (fe < fr) {
          s.pts[iw] = std::move(xe);
          s.vals[iw] = fe;
        } else {
          s.pts[iw] = std::move(xr);
          s.vals[iw] = fr;
        }
        continue;
      }
      if (fr < s.vals[isw]) {
        s.pts[iw] = std::move(xr);
        s.vals[iw] = fr;
        continue;
      }
      const bool outside = fr < s.vals[iw];
      auto xc = along(outside ? -0.5 : 0.5);
      const double fc = eval(xc);
      if (fc < (outside ? fr : s.vals[iw])) {
        s.pts[iw] = std::move(xc);
        s.vals[iw] = fc;
        continue;
      }
      for (std::size_t v = 0; v <= n; ++v) {
        if (v == ib) continue;
        for (std::size_t k = 0; k < n; ++k) s.pts[v][k] = s.pts[ib][k] + 0.5 * (s.pts[v][k] - s.pts[ib][k]);
        s.vals[v] = eval(s.pts[v]);
      }
    }

    const auto ib = static_cast<std::size_t>(std::min_element(s.vals.begin(), s.vals.end()) - s.vals.begin());
    if (s.vals[ib] <= best_f) {
      best_f = s.vals[ib];
      best_x = s.pts[ib];
    }
    res.converged = round_converged;
    if (res.evaluations >= opts.max_evaluations) break;
  }

  res.x = std::move(best_x);
  res.value = best_f;
  return res;
}

}  // namespace bell
