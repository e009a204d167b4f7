#include "avse/metrics/objective.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include "avse/core/error.h"
#include "avse/dsp/fft.h"
#include "avse/dsp/resample.h"

namespace avse::metrics {

double Sdi(const dsp::Waveform& clean, const dsp::Waveform& enhanced) {
  const std::size_t n = std::min(clean.size(), enhanced.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = clean.samples[i];
    const double d = enhanced.samples[i] - c;
    num += d * d;
    den += c * c;
  }
  if (!(den > 0.0)) throw Error("sdi: clean signal has zero energy");
  return num / den;
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Symmetric Hann of length n without its zero end points.
std::vector<double> InnerHann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * (i + 1) / (n + 1));
  return w;
}

std::vector<double> ToRate(const dsp::Waveform& w, std::size_t n, int rate) {
  std::vector<float> x(w.samples.begin(), w.samples.begin() + n);
  if (w.rate != rate) {
    const int g = std::gcd(w.rate, rate);
    x = dsp::ResamplePoly(x, rate / g, w.rate / g);
  }
  return std::vector<double>(x.begin(), x.end());
}

// Frames start at 0, hop, ... while start < len - frame (the final
// full-length frame is excluded, matching the reference implementation).
int CountFrames(std::size_t len, int frame, int hop) {
  if (len <= static_cast<std::size_t>(frame)) return 0;
  return static_cast<int>((len - frame + hop - 1) / hop);
}

void RemoveSilentFrames(std::vector<double>& x, std::vector<double>& y, const StoiOptions& o) {
  const int frame = o.frame_length, hop = frame / 2;
  const int n = CountFrames(x.size(), frame, hop);
  const std::vector<double> w = InnerHann(frame);
  std::vector<double> energy(n);
  for (int t = 0; t < n; ++t) {
    double e = 0.0;
    for (int i = 0; i < frame; ++i) {
      const double v = w[i] * x[t * hop + i];
      e += v * v;
    }
    energy[t] = 20.0 * std::log10(std::sqrt(e) + kEps);
  }
  const double top = n ? *std::max_element(energy.begin(), energy.end()) : 0.0;
  std::vector<int> keep;
  for (int t = 0; t < n; ++t)
    if (top - o.dynamic_range_db - energy[t] < 0.0) keep.push_back(t);
  const std::size_t len = keep.empty() ? 0 : (keep.size() - 1) * hop + frame;
  std::vector<double> xs(len, 0.0), ys(len, 0.0);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const int src = keep[k] * hop;
    const std::size_t dst = k * hop;
    for (int i = 0; i < frame; ++i) {
      xs[dst + i] += w[i] * x[src + i];
      ys[dst + i] += w[i] * y[src + i];
    }
  }
  x.swap(xs);
  y.swap(ys);
}

// Band envelopes: bands x frames.
std::vector<std::vector<double>> BandEnvelopes(const std::vector<double>& x,
                                               const std::vector<std::vector<double>>& obm,
                                               const StoiOptions& o) {
  const int frame = o.frame_length, hop = frame / 2;
  const int n = CountFrames(x.size(), frame, hop);
  const std::vector<double> w = InnerHann(frame);
  dsp::RealDft dft(o.fft_size);
  std::vector<double> buf(o.fft_size);
  std::vector<std::complex<double>> spec(dft.num_bins());
  std::vector<std::vector<double>> env(obm.size(), std::vector<double>(n));
  for (int t = 0; t < n; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int i = 0; i < frame; ++i) buf[i] = w[i] * x[t * hop + i];
    dft.Forward(buf.data(), spec.data());
    for (std::size_t b = 0; b < obm.size(); ++b) {
      double p = 0.0;
      for (int k = 0; k < dft.num_bins(); ++k)
        if (obm[b][k] != 0.0) p += std::norm(spec[k]);
      env[b][t] = std::sqrt(p);
    }
  }
  return env;
}

double Norm(const double* v, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

}  // namespace

std::vector<std::vector<double>> ThirdOctaveBands(const StoiOptions& o) {
  const int bins = o.fft_size / 2 + 1;
  std::vector<double> f(bins);
  for (int k = 0; k < bins; ++k) f[k] = static_cast<double>(o.sample_rate) * k / o.fft_size;
  auto nearest = [&](double hz) {
    int best = 0;
    for (int k = 1; k < bins; ++k)
      if ((f[k] - hz) * (f[k] - hz) < (f[best] - hz) * (f[best] - hz)) best = k;
    return best;
  };
  std::vector<std::vector<double>> obm(o.num_bands, std::vector<double>(bins, 0.0));
  for (int b = 0; b < o.num_bands; ++b) {
    const int lo = nearest(o.min_freq_hz * std::pow(2.0, (2.0 * b - 1.0) / 6.0));
    const int hi = nearest(o.min_freq_hz * std::pow(2.0, (2.0 * b + 1.0) / 6.0));
    for (int k = lo; k < hi; ++k) obm[b][k] = 1.0;
  }
  return obm;
}

double Stoi(const dsp::Waveform& clean, const dsp::Waveform& degraded, const StoiOptions& o) {
  if (clean.rate != degraded.rate) throw Error("stoi: sample rates differ");
  const std::size_t n = std::min(clean.size(), degraded.size());
  std::vector<double> x = ToRate(clean, n, o.sample_rate);
  std::vector<double> y = ToRate(degraded, n, o.sample_rate);
  RemoveSilentFrames(x, y, o);

  const auto obm = ThirdOctaveBands(o);
  const auto xe = BandEnvelopes(x, obm, o);
  const auto ye = BandEnvelopes(y, obm, o);
  const int frames = xe.empty() ? 0 : static_cast<int>(xe[0].size());
  const int seg = o.segment_frames;
  if (frames < seg)
    throw Error("stoi: only " + std::to_string(frames) + " frames after silence removal, need " +
                std::to_string(seg));

  const double clip = std::pow(10.0, -o.beta_db / 20.0);
  std::vector<double> xs(seg), ys(seg);
  double total = 0.0;
  const int segments = frames - seg + 1;
  for (int m = 0; m < segments; ++m) {
    for (std::size_t b = 0; b < obm.size(); ++b) {
      std::copy(xe[b].begin() + m, xe[b].begin() + m + seg, xs.begin());
      std::copy(ye[b].begin() + m, ye[b].begin() + m + seg, ys.begin());
      const double scale = Norm(xs.data(), seg) / (Norm(ys.data(), seg) + kEps);
      for (int i = 0; i < seg; ++i) ys[i] = std::min(ys[i] * scale, xs[i] * (1.0 + clip));
      const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / seg;
      const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / seg;
      for (int i = 0; i < seg; ++i) {
        xs[i] -= mx;
        ys[i] -= my;
      }
      const double nx = Norm(xs.data(), seg) + kEps, ny = Norm(ys.data(), seg) + kEps;
      double corr = 0.0;
      for (int i = 0; i < seg; ++i) corr += (xs[i] / nx) * (ys[i] / ny);
      total += corr;
    }
  }
  return total / (static_cast<double>(segments) * obm.size());
}

}  // namespace avse::metrics
