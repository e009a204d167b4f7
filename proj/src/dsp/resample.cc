#include "avse/dsp/resample.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avse/core/error.h"

namespace avse::dsp {

std::vector<double> DesignPolyphaseFilter(int up, int down,
                                          const ResampleOptions& opts) {
  if (up < 1 || down < 1) throw Error("resample factors must be positive");
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  const int max_rate = std::max(up, down);
  const int half = opts.half_length_factor * max_rate;
  const int len = 2 * half + 1;
  const double cutoff = 1.0 / max_rate;  // fraction of Nyquist
  const double i0_beta = std::cyl_bessel_i(0.0, opts.kaiser_beta);
  std::vector<double> h(len);
  for (int n = 0; n < len; ++n) {
    double t = n - half;
    double x = cutoff * t;
    double sinc = (t == 0) ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
    double r = t / half;
    double kaiser =
        std::cyl_bessel_i(0.0, opts.kaiser_beta * std::sqrt(std::max(0.0, 1.0 - r * r))) /
        i0_beta;
    h[n] = cutoff * sinc * kaiser;
  }
  double sum = std::accumulate(h.begin(), h.end(), 0.0);
  for (double& v : h) v *= up / sum;
  return h;
}

std::vector<float> ResamplePoly(const std::vector<float>& x, int up, int down,
                                const ResampleOptions& opts) {
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return x;
  const std::vector<double> h = DesignPolyphaseFilter(up, down, opts);
  const long len = static_cast<long>(h.size());
  const long half = (len - 1) / 2;
  const long n_in = static_cast<long>(x.size());
  const long n_out = (n_in * up + down - 1) / down;
  std::vector<float> y(static_cast<std::size_t>(n_out));
  for (long m = 0; m < n_out; ++m) {
    // y[m] = sum_i x[i] h[m*down + half - i*up]
    const long t = m * down + half;
    long i_lo = std::max(0L, (t - (len - 1) + up - 1) / up);
    if (t - (len - 1) < 0) i_lo = 0;
    const long i_hi = std::min(n_in - 1, t / up);
    double acc = 0.0;
    for (long i = i_lo; i <= i_hi; ++i) acc += x[i] * h[t - i * up];
    y[m] = static_cast<float>(acc);
  }
  return y;
}

}  // namespace avse::dsp
