#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "regionblend/errors.hpp"

namespace regionblend {

// Discrete diffusion noise schedule: linear betas, cumulative-product
// alpha_bar, and an evenly spaced inference timestep grid.
//
// Derived quantities at timestep t:
//   alpha(t)  = sqrt(alpha_bar[t])
//   sigma(t)  = sqrt(1 - alpha_bar[t])
//   lambda(t) = log(alpha / sigma)   (strictly decreasing in t)
struct NoiseSchedule {
  int t_train = 0;
  std::vector<double> betas;
  std::vector<double> alpha_bar;
  std::vector<int> inference_steps;  // strictly increasing, within [0, t_train)

  double alpha(int t) const { return std::sqrt(bar(t)); }
  double sigma(int t) const { return std::sqrt(1.0 - bar(t)); }
  double lambda(int t) const { return std::log(alpha(t) / sigma(t)); }

  double bar(int t) const {
    if (t < 0 || t >= t_train) throw SolverError("timestep out of range");
    return alpha_bar[static_cast<size_t>(t)];
  }

  bool on_grid(int t) const {
    for (int s : inference_steps)
      if (s == t) return true;
    return false;
  }

  void require_on_grid(int t) const {
    if (!on_grid(t)) throw SolverError("timestep " + std::to_string(t) + " is off the inference grid");
  }

  int n_steps() const { return static_cast<int>(inference_steps.size()); }

  // Test hook: build a schedule directly from an alpha_bar table; the full
  // table doubles as the grid.
  static NoiseSchedule from_alpha_bar(const std::vector<double>& bar_values);
};

// Linear-beta schedule with an N-point grid spanning [0, t_train).
// Requires t_train >= n_inference >= 2 and 0 < beta_start <= beta_end < 1.
NoiseSchedule make_schedule(int t_train, double beta_start, double beta_end, int n_inference);

}  // namespace regionblend
