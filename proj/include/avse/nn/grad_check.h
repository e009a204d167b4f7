#ifndef AVSE_NN_GRAD_CHECK_H_
#define AVSE_NN_GRAD_CHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "avse/nn/layers.h"

namespace avse::nn {

struct GradCheckOptions {
  double step = 1e-3;
  // Entries probed per tensor; 0 probes every entry.
  int samples_per_tensor = 0;
  std::uint64_t seed = 0;
  // Combine central differences at step and step/2 as (4 D(h/2) - D(h)) / 3,
  // cancelling the O(h^2) truncation term that dominates on entries whose
  // gradient is close to zero.
  bool richardson = false;
  // Denominator floor of the relative error. Central differences carry
  // roundoff of about eps * |loss| / step, so large losses need a floor
  // proportional to the loss where true gradients vanish.
  double floor = 1e-8;
  // Probes whose error exceeds `refine_above` are re-estimated at each of
  // these smaller steps and keep the best agreement. Strongly curved
  // entries need a finer step than the rest of the network.
  std::vector<double> refine_steps;
  double refine_above = 1e-4;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  // Probes whose +step / -step evaluations fell in different max-pool
  // regions; the central difference is not a derivative there.
  std::size_t skipped_kinks = 0;
  // Probes that were re-estimated at a refine step.
  std::size_t refined = 0;
};

// |a - n| / max(|a|, |n|, floor)
double RelativeError(double analytic, double numeric, double floor = 1e-8);

// `loss` evaluates the objective at the current parameter values without
// side effects on gradients. `gradients` must leave d(loss)/d(param) in each
// parameter's grad tensor. Only trainable parameters are probed; central
// differences of width 2 * step. `branch`, when given, is read after every
// loss evaluation; probes where it differs from the unperturbed value are
// skipped and counted.
GradCheckResult CheckGradients(const std::function<double()>& loss,
                               const std::function<void()>& gradients,
                               const std::vector<Parameter<double>*>& params,
                               const GradCheckOptions& opts = {},
                               const std::function<std::uint64_t()>& branch = {});

// Checks `net` under MSE against `target`, including the gradient with
// respect to `input` (reported as parameter "input"). Dropout, if present,
// is re-seeded identically on every evaluation.
GradCheckResult CheckNetworkGradients(Sequential<double>& net, const BasicTensor<double>& input,
                                      const BasicTensor<double>& target, Mode mode,
                                      const GradCheckOptions& opts = {});

}  // namespace avse::nn

#endif  // AVSE_NN_GRAD_CHECK_H_
