#pragma once

#include <Eigen/Core>

#include <complex>
#include <stdexcept>
#include <utility>

namespace tubalsr {

/// Dense third-order tensor of size n1 x n2 x n3.
///
/// Storage is flat with the third index fastest: offset(i,j,k) = (i*n2 + j)*n3 + k.
/// This makes every tube t(i,j,:) contiguous, which is what the transform along
/// the third dimension wants, and matches the TNS3 file layout byte for byte.
template <typename Scalar>
class Tensor3 {
 public:
  using Index = Eigen::Index;
  using FlatVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  // (n1*n2) x n3 view with one tube per row.
  using TubeMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Tensor3() : n1_(0), n2_(0), n3_(0) {}

  Tensor3(Index n1, Index n2, Index n3) : n1_(n1), n2_(n2), n3_(n3) {
    if (n1 < 0 || n2 < 0 || n3 < 0) throw std::invalid_argument("Tensor3: negative dimension");
    data_ = FlatVector::Zero(n1 * n2 * n3);
  }

  Index n1() const { return n1_; }
  Index n2() const { return n2_; }
  Index n3() const { return n3_; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  bool same_dims(const Tensor3& o) const { return n1_ == o.n1_ && n2_ == o.n2_ && n3_ == o.n3_; }

  const Scalar& operator()(Index i, Index j, Index k) const { return data_[(i * n2_ + j) * n3_ + k]; }
  Scalar& operator()(Index i, Index j, Index k) { return data_[(i * n2_ + j) * n3_ + k]; }

  const Scalar* data() const { return data_.data(); }
  Scalar* data() { return data_.data(); }

  /// Flat view over all entries (third index fastest).
  Eigen::Map<const FlatVector> flat() const { return {data_.data(), data_.size()}; }
  Eigen::Map<FlatVector> flat() { return {data_.data(), data_.size()}; }

  /// Contiguous view of tube (i, j, :).
  Eigen::Map<const FlatVector> tube(Index i, Index j) const {
    return {data_.data() + (i * n2_ + j) * n3_, n3_};
  }
  Eigen::Map<FlatVector> tube(Index i, Index j) { return {data_.data() + (i * n2_ + j) * n3_, n3_}; }

  /// All tubes as rows of an (n1*n2) x n3 matrix, zero copy.
  Eigen::Map<const TubeMatrix> tubes() const { return {data_.data(), n1_ * n2_, n3_}; }
  Eigen::Map<TubeMatrix> tubes() { return {data_.data(), n1_ * n2_, n3_}; }

  /// Frontal slice (:,:,k) as an n1 x n2 matrix (copied out; slices are strided).
  Matrix slice(Index k) const {
    Matrix m(n1_, n2_);
    for (Index i = 0; i < n1_; ++i)
      for (Index j = 0; j < n2_; ++j) m(i, j) = (*this)(i, j, k);
    return m;
  }

  void set_slice(Index k, const Eigen::Ref<const Matrix>& m) {
    if (m.rows() != n1_ || m.cols() != n2_) throw std::invalid_argument("Tensor3::set_slice: shape mismatch");
    for (Index i = 0; i < n1_; ++i)
      for (Index j = 0; j < n2_; ++j) (*this)(i, j, k) = m(i, j);
  }

  bool all_finite() const { return data_.allFinite(); }

  static Tensor3 zero(Index n1, Index n2, Index n3) { return Tensor3(n1, n2, n3); }

  Tensor3& operator+=(const Tensor3& o) {
    check_same(o);
    data_ += o.data_;
    return *this;
  }
  Tensor3& operator-=(const Tensor3& o) {
    check_same(o);
    data_ -= o.data_;
    return *this;
  }
  Tensor3& operator*=(Scalar s) {
    data_ *= s;
    return *this;
  }

  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  friend Tensor3 operator*(Tensor3 a, Scalar s) { return a *= s; }
  friend Tensor3 operator*(Scalar s, Tensor3 a) { return a *= s; }

 private:
  void check_same(const Tensor3& o) const {
    if (!same_dims(o)) throw std::invalid_argument("Tensor3: dimension mismatch");
  }

  Index n1_, n2_, n3_;
  FlatVector data_;
};

using Tensor3d = Tensor3<double>;
using FreqTensor3 = Tensor3<std::complex<double>>;

template <typename Scalar>
double fro_norm(const Tensor3<Scalar>& t) {
  return t.flat().norm();
}

template <typename Scalar>
double l1_norm(const Tensor3<Scalar>& t) {
  return t.flat().template lpNorm<1>();
}

/// Identity tensor: slice 0 is the n x n identity, all other slices zero.
inline Tensor3d identity_tensor(Eigen::Index n, Eigen::Index n3) {
  Tensor3d id(n, n, n3);
  for (Eigen::Index i = 0; i < n; ++i) id(i, i, 0) = 1.0;
  return id;
}

}  // namespace tubalsr
