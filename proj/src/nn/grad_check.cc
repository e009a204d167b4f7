#include "avse/nn/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace avse::nn {

double RelativeError(double analytic, double numeric, double floor) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
  return std::fabs(analytic - numeric) / denom;
}

GradCheckResult CheckGradients(const std::function<double()>& loss,
                               const std::function<void()>& gradients,
                               const std::vector<Parameter<double>*>& params,
                               const GradCheckOptions& opts,
                               const std::function<std::uint64_t()>& branch) {
  gradients();
  const std::uint64_t base_branch = branch ? branch() : 0;
  std::vector<BasicTensor<double>> analytic;
  analytic.reserve(params.size());
  for (const Parameter<double>* p : params) analytic.push_back(p->grad);

  Rng rng = Rng::Derive(opts.seed, 0x67636b);
  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter<double>& p = *params[pi];
    if (!p.trainable) continue;
    std::vector<std::size_t> idx(p.value.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (opts.samples_per_tensor > 0 &&
        idx.size() > static_cast<std::size_t>(opts.samples_per_tensor)) {
      rng.Shuffle(idx);
      idx.resize(opts.samples_per_tensor);
    }
    for (std::size_t i : idx) {
      const double orig = p.value[i];
      bool kink = false;
      auto central = [&](double h) {
        p.value[i] = orig + h;
        const double up = loss();
        if (branch && branch() != base_branch) kink = true;
        p.value[i] = orig - h;
        const double down = loss();
        if (branch && branch() != base_branch) kink = true;
        p.value[i] = orig;
        return (up - down) / (2.0 * h);
      };
      auto estimate = [&](double h) {
        const double d = central(h);
        return opts.richardson ? (4.0 * central(0.5 * h) - d) / 3.0 : d;
      };
      double numeric = estimate(opts.step);
      if (kink) {
        ++result.skipped_kinks;
        continue;
      }
      double err = RelativeError(analytic[pi][i], numeric, opts.floor);
      if (err > opts.refine_above && !opts.refine_steps.empty()) {
        ++result.refined;
        for (double h : opts.refine_steps) {
          kink = false;
          const double n = estimate(h);
          const double e = RelativeError(analytic[pi][i], n, opts.floor);
          if (!kink && e < err) {
            err = e;
            numeric = n;
          }
        }
      }
      ++result.checked;
      if (result.checked == 1 || err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = p.name;
        result.worst_index = i;
        result.worst_analytic = analytic[pi][i];
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

GradCheckResult CheckNetworkGradients(Sequential<double>& net, const BasicTensor<double>& input,
                                      const BasicTensor<double>& target, Mode mode,
                                      const GradCheckOptions& opts) {
  Parameter<double> in_param{"input", input, BasicTensor<double>(input.dims()), true};
  std::vector<Parameter<double>*> params = net.Parameters();
  params.push_back(&in_param);

  auto forward = [&](ForwardContext& ctx) { return net.Forward(in_param.value, ctx); };
  auto loss = [&]() {
    Rng rng = Rng::Derive(opts.seed, 0x64726f70);
    ForwardContext ctx{mode, &rng};
    return MseLoss(forward(ctx), target).value;
  };
  auto gradients = [&]() {
    ZeroGrads(params);
    Rng rng = Rng::Derive(opts.seed, 0x64726f70);
    ForwardContext ctx{mode, &rng};
    LossResult<double> l = MseLoss(forward(ctx), target);
    in_param.grad = net.Backward(l.grad);
  };
  return CheckGradients(loss, gradients, params, opts, [&] { return net.BranchSignature(); });
}

}  // namespace avse::nn
