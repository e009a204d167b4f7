#ifndef AVSE_CORE_TENSOR_H_
#define AVSE_CORE_TENSOR_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "avse/core/error.h"

namespace avse {

using Dims = std::vector<int>;

inline std::size_t NumElements(const Dims& dims) {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

inline std::string DimsString(const Dims& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(dims[i]);
  }
  return s;
}

// Shape-tagged, row-major dense array. Scalar is float for everything that
// is stored or trained; double instantiations exist for gradient checking.
template <typename Scalar>
class BasicTensor {
 public:
  using value_type = Scalar;

  BasicTensor() = default;

  explicit BasicTensor(Dims dims, Scalar fill = Scalar(0))
      : dims_(std::move(dims)) {
    CheckDims(dims_);
    data_.assign(NumElements(dims_), fill);
  }

  BasicTensor(Dims dims, std::vector<Scalar> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    CheckDims(dims_);
    if (data_.size() != NumElements(dims_))
      throw Error("tensor data length " + std::to_string(data_.size()) +
                  " does not match dims " + DimsString(dims_));
  }

  const Dims& dims() const { return dims_; }
  int dim(std::size_t i) const { return dims_.at(i); }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  std::span<Scalar> values() { return data_; }
  std::span<const Scalar> values() const { return data_; }
  const std::vector<Scalar>& vector() const { return data_; }

  Scalar& operator[](std::size_t i) { return data_[i]; }
  const Scalar& operator[](std::size_t i) const { return data_[i]; }

  // Row-major element access for rank-2 and rank-3 tensors.
  Scalar& at(int i, int j) { return data_[Offset2(i, j)]; }
  const Scalar& at(int i, int j) const { return data_[Offset2(i, j)]; }
  Scalar& at(int i, int j, int k) { return data_[Offset3(i, j, k)]; }
  const Scalar& at(int i, int j, int k) const {
    return data_[Offset3(i, j, k)];
  }

  // Contiguous slice along the leading axis.
  std::span<Scalar> row(int i) {
    std::size_t stride = size() / static_cast<std::size_t>(dims_.at(0));
    return std::span<Scalar>(data_).subspan(i * stride, stride);
  }
  std::span<const Scalar> row(int i) const {
    std::size_t stride = size() / static_cast<std::size_t>(dims_.at(0));
    return std::span<const Scalar>(data_).subspan(i * stride, stride);
  }

  void Reshape(Dims dims) {
    CheckDims(dims);
    if (NumElements(dims) != data_.size())
      throw Error("cannot reshape " + DimsString(dims_) + " to " +
                  DimsString(dims));
    dims_ = std::move(dims);
  }

  BasicTensor Reshaped(Dims dims) const {
    BasicTensor t = *this;
    t.Reshape(std::move(dims));
    return t;
  }

  void Fill(Scalar v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename Other>
  BasicTensor<Other> Cast() const {
    std::vector<Other> out(data_.begin(), data_.end());
    return BasicTensor<Other>(dims_, std::move(out));
  }

  bool AllFinite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](Scalar v) { return std::isfinite(v); });
  }

  bool SameShape(const BasicTensor& o) const { return dims_ == o.dims_; }

  std::string ShapeString() const { return DimsString(dims_); }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  static void CheckDims(const Dims& dims) {
    for (int d : dims)
      if (d <= 0) throw Error("tensor dims must be positive: " + DimsString(dims));
  }
  std::size_t Offset2(int i, int j) const {
    return static_cast<std::size_t>(i) * dims_[1] + j;
  }
  std::size_t Offset3(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * dims_[1] + j) * dims_[2] + k;
  }

  Dims dims_;
  std::vector<Scalar> data_;
};

using Tensor = BasicTensor<float>;

// Throws NumericError naming `what` when any entry is NaN/Inf.
template <typename Scalar>
void RequireFinite(const BasicTensor<Scalar>& t, const std::string& what) {
  if (!t.AllFinite()) throw NumericError("non-finite values in " + what);
}

}  // namespace avse

#endif  // AVSE_CORE_TENSOR_H_
