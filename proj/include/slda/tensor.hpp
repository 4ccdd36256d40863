#pragma once

#include <vector>

#include "slda/common.hpp"

namespace slda {

/// Dense cubic third-order tensor, row-major in (i, j, l).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int dim) : dim_(dim), data_(static_cast<std::size_t>(dim) * dim * dim, 0.0) {}

  int dim() const { return dim_; }
  double& operator()(int i, int j, int l) { return data_[index(i, j, l)]; }
  double operator()(int i, int j, int l) const { return data_[index(i, j, l)]; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  Tensor3& operator+=(const Tensor3& other);
  Tensor3& operator-=(const Tensor3& other);
  Tensor3& operator*=(double c);

  /// this += c * a ⊗ a ⊗ a
  void add_cube(double c, const Vector& a);
  /// this += c * (A ⊗ b + placements of b in each mode), A symmetric.
  void add_sym_pair(double c, const Matrix& a, const Vector& b);
  /// this += c * (a⊗a⊗b + a⊗b⊗a + b⊗a⊗a)
  void add_sym_outer(double c, const Vector& a, const Vector& b);

  /// T(I, u, u)
  Vector apply_twice(const Vector& u) const;
  /// T(u, u, u)
  double apply_thrice(const Vector& u) const;
  /// Average over the six index permutations.
  void symmetrize();
  /// Largest entrywise deviation from supersymmetry.
  double asymmetry() const;
  double frobenius() const;

 private:
  std::size_t index(int i, int j, int l) const {
    return (static_cast<std::size_t>(i) * dim_ + j) * dim_ + l;
  }

  int dim_ = 0;
  std::vector<double> data_;
};

double max_abs_diff(const Tensor3& a, const Tensor3& b);

}  // namespace slda
