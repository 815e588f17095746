#include "regionblend/solver.hpp"

#include <cmath>

namespace regionblend {

Tensor ddim_step(const Tensor& z, const Tensor& eps_pred, int t, int t_next,
                 const NoiseSchedule& sched) {
  sched.require_on_grid(t);
  sched.require_on_grid(t_next);
  z.require_same_shape(eps_pred, "ddim_step: z vs eps_pred");
  if (t_next == t) return z;

  const double a_t = sched.alpha(t), s_t = sched.sigma(t);
  const double a_n = sched.alpha(t_next), s_n = sched.sigma(t_next);

  Tensor out = zeros_like(z);
  const float ca = float(a_n / a_t);
  const float ce = float(s_n - a_n * s_t / a_t);
  for (size_t i = 0; i < z.size(); ++i) out.v[i] = ca * z.v[i] + ce * eps_pred.v[i];
  return out;
}

Tensor dpmpp_2m_step(const Tensor& z, const Tensor& x_pred, SolverState& state, int t, int t_next,
                     const NoiseSchedule& sched) {
  sched.require_on_grid(t);
  sched.require_on_grid(t_next);
  z.require_same_shape(x_pred, "dpmpp_2m_step: z vs x_pred");

  const double l_t = sched.lambda(t), l_n = sched.lambda(t_next);
  const double h = l_n - l_t;
  if (h == 0.0) throw SolverError("dpmpp_2m_step: zero step (h = 0)");

  const double s_ratio = sched.sigma(t_next) / sched.sigma(t);
  const double phi = std::expm1(-h);  // exp(-h) - 1
  const double a_n = sched.alpha(t_next);

  Tensor out = zeros_like(z);
  if (!state.prev_data_pred) {
    const float cz = float(s_ratio), cx = float(-a_n * phi);
    for (size_t i = 0; i < z.size(); ++i) out.v[i] = cz * z.v[i] + cx * x_pred.v[i];
  } else {
    const double h_prev = l_t - state.prev_lambda;
    const double r = h_prev / h;
    if (std::fabs(r) < 1e-12) throw SolverError("dpmpp_2m_step: degenerate grid (r ~ 0)");
    const double w_cur = 1.0 + 1.0 / (2.0 * r);
    const double w_prev = 1.0 / (2.0 * r);
    const Tensor& xp = *state.prev_data_pred;
    const float cz = float(s_ratio);
    const float cc = float(-a_n * phi * w_cur);
    const float cp = float(a_n * phi * w_prev);
    for (size_t i = 0; i < z.size(); ++i)
      out.v[i] = cz * z.v[i] + cc * x_pred.v[i] + cp * xp.v[i];
  }

  state.prev_data_pred = x_pred;
  state.prev_lambda = l_t;
  return out;
}

Tensor run_trajectory(const Tensor& z_start, const EpsModel& eps, const NoiseSchedule& sched,
                      SolverKind kind, Direction direction) {
  const auto& grid = sched.inference_steps;
  const int n = static_cast<int>(grid.size());
  SolverState state{kind, direction, {}, 0.0};

  Tensor z = z_start;
  for (int i = 0; i < n - 1; ++i) {
    int t, t_next;
    if (direction == Direction::Denoise) {
      t = grid[n - 1 - i];
      t_next = grid[n - 2 - i];
    } else {
      t = grid[i];
      t_next = grid[i + 1];
    }
    Tensor e = eps(z, t);
    if (kind == SolverKind::DDIM) {
      z = ddim_step(z, e, t, t_next, sched);
    } else {
      const double a_t = sched.alpha(t), s_t = sched.sigma(t);
      Tensor x_pred = zeros_like(z);
      const float cz = float(1.0 / a_t), ce = float(-s_t / a_t);
      for (size_t k = 0; k < z.size(); ++k) x_pred.v[k] = cz * z.v[k] + ce * e.v[k];
      z = dpmpp_2m_step(z, x_pred, state, t, t_next, sched);
    }
  }
  return z;
}

}  // namespace regionblend
