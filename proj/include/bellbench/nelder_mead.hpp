#pragma once

#include <functional>
#include <vector>

namespace bell {

struct NelderMeadOptions {
  double initial_step = 10.0;   // simplex edge along each coordinate
  double x_tolerance = 1e-10;   // max vertex distance from the best vertex
  double f_tolerance = 1e-20;   // max |f_worst - f_best|
  int max_evaluations = 20000;
  int restarts = 2;             // fresh simplices around the converged point
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes `f` with the classic downhill simplex method
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
///
/// Non-finite objective values rank behind every finite one. `on_iteration`,
/// if set, receives the best value after each iteration.
NelderMeadResult nelder_mead_minimize(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> x0, const NelderMeadOptions& opts = {},
                                      const std::function<void(double)>& on_iteration = {});

}  // namespace bell
