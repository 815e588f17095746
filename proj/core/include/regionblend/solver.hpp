#pragma once

#include <functional>
#include <optional>

#include "regionblend/schedule.hpp"
#include "regionblend/tensor.hpp"

namespace regionblend {

enum class SolverKind { DDIM, DPMpp2M };
enum class Direction { Denoise, Invert };

// Multistep buffer for the DPM-Solver++(2M) scheme: at most one prior data
// prediction with its half-logSNR value. One state per trajectory.
struct SolverState {
  SolverKind kind = SolverKind::DDIM;
  Direction direction = Direction::Denoise;
  std::optional<Tensor> prev_data_pred;
  double prev_lambda = 0.0;

  void reset() { prev_data_pred.reset(); }
};

// Deterministic (eta = 0) DDIM update from t to t_next:
//   x_hat  = (z - sigma_t * eps) / alpha_t
//   z_next = alpha_next * x_hat + sigma_next * eps
// t_next == t is a no-op. Both timesteps must lie on the inference grid.
Tensor ddim_step(const Tensor& z, const Tensor& eps_pred, int t, int t_next,
                 const NoiseSchedule& sched);

// DPM-Solver++(2M) data-prediction update from t to t_next. x_pred is the
// data prediction (z - sigma_t * eps) / alpha_t at t. With h = lambda_next -
// lambda_t the history-free step is
//   z_next = (sigma_next/sigma_t) * z - alpha_next * (exp(-h) - 1) * x_pred
// and with one buffered prediction, r = h_prev / h and
//   D = (1 + 1/(2r)) * x_pred - 1/(2r) * x_prev
// replaces x_pred. The state's history is updated with x_pred.
Tensor dpmpp_2m_step(const Tensor& z, const Tensor& x_pred, SolverState& state, int t, int t_next,
                     const NoiseSchedule& sched);

using EpsModel = std::function<Tensor(const Tensor&, int)>;

// Runs the chosen update over the full inference grid. Denoising walks the
// grid from its largest timestep down to the smallest; inversion walks the
// same grid in the opposite order reusing the identical update with swapped
// (t, t_next). Returns the terminal latent.
Tensor run_trajectory(const Tensor& z_start, const EpsModel& eps, const NoiseSchedule& sched,
                      SolverKind kind, Direction direction);

}  // namespace regionblend
