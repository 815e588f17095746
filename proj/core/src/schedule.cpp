#include "regionblend/schedule.hpp"

#include <cmath>

namespace regionblend {

NoiseSchedule make_schedule(int t_train, double beta_start, double beta_end, int n_inference) {
  if (n_inference < 2 || t_train < n_inference)
    throw ConfigError("schedule: need t_train >= n_inference >= 2");
  if (!(beta_start > 0.0) || beta_start > beta_end || !(beta_end < 1.0))
    throw ConfigError("schedule: need 0 < beta_start <= beta_end < 1");

  NoiseSchedule s;
  s.t_train = t_train;
  s.betas.resize(t_train);
  s.alpha_bar.resize(t_train);
  double prod = 1.0;
  for (int t = 0; t < t_train; ++t) {
    const double frac = t_train == 1 ? 0.0 : double(t) / double(t_train - 1);
    s.betas[t] = beta_start + (beta_end - beta_start) * frac;
    prod *= 1.0 - s.betas[t];
    s.alpha_bar[t] = prod;
  }

  s.inference_steps.resize(n_inference);
  for (int i = 0; i < n_inference; ++i) {
    // Spacing >= 1 since t_train >= n_inference, so the grid is strictly
    // increasing after rounding.
    s.inference_steps[i] =
        static_cast<int>(std::lround(double(i) * double(t_train - 1) / double(n_inference - 1)));
  }
  return s;
}

NoiseSchedule NoiseSchedule::from_alpha_bar(const std::vector<double>& bar_values) {
  if (bar_values.size() < 2) throw ConfigError("schedule: need at least 2 alpha_bar entries");
  NoiseSchedule s;
  s.t_train = static_cast<int>(bar_values.size());
  s.alpha_bar = bar_values;
  s.betas.resize(bar_values.size());
  double prev = 1.0;
  for (size_t t = 0; t < bar_values.size(); ++t) {
    if (!(bar_values[t] > 0.0) || !(bar_values[t] < 1.0) || bar_values[t] >= prev)
      throw ConfigError("schedule: alpha_bar must be strictly decreasing within (0,1)");
    s.betas[t] = 1.0 - bar_values[t] / prev;
    prev = bar_values[t];
  }
  s.inference_steps.resize(bar_values.size());
  for (int i = 0; i < s.t_train; ++i) s.inference_steps[i] = i;
  return s;
}

}  // namespace regionblend
