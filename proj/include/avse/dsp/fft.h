#ifndef AVSE_DSP_FFT_H_
#define AVSE_DSP_FFT_H_

#include <complex>
#include <vector>

namespace avse::dsp {

// Real DFT of fixed size backed by FFTW. Instances are not shared between
// threads; construction serializes on the FFTW planner.
class RealDft {
 public:
  explicit RealDft(int n);
  ~RealDft();
  RealDft(const RealDft&) = delete;
  RealDft& operator=(const RealDft&) = delete;

  int size() const { return n_; }
  int num_bins() const { return n_ / 2 + 1; }

  // in: n real samples; out: n/2+1 bins.
  void Forward(const double* in, std::complex<double>* out);
  // in: n/2+1 bins; out: n real samples, scaled by 1/n (true inverse).
  void Inverse(const std::complex<double>* in, double* out);

 private:
  int n_;
  double* real_;
  void* spectrum_;
  void* forward_plan_;
  void* inverse_plan_;
};

// Periodic Hann window, w[i] = 0.5 - 0.5 cos(2 pi i / n).
std::vector<double> PeriodicHann(int n);

}  // namespace avse::dsp

#endif  // AVSE_DSP_FFT_H_
