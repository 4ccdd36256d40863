#include "slda/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace slda {

Tensor3& Tensor3::operator+=(const Tensor3& other) {
  for (std::size_t n = 0; n < data_.size(); ++n) data_[n] += other.data_[n];
  return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& other) {
  for (std::size_t n = 0; n < data_.size(); ++n) data_[n] -= other.data_[n];
  return *this;
}

Tensor3& Tensor3::operator*=(double c) {
  for (double& x : data_) x *= c;
  return *this;
}

void Tensor3::add_cube(double c, const Vector& a) {
  for (int i = 0; i < dim_; ++i) {
    const double ci = c * a(i);
    for (int j = 0; j < dim_; ++j) {
      const double cij = ci * a(j);
      double* row = &data_[index(i, j, 0)];
      for (int l = 0; l < dim_; ++l) row[l] += cij * a(l);
    }
  }
}

void Tensor3::add_sym_pair(double c, const Matrix& a, const Vector& b) {
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      double* row = &data_[index(i, j, 0)];
      const double aij = a(i, j);
      for (int l = 0; l < dim_; ++l) {
        row[l] += c * (aij * b(l) + a(i, l) * b(j) + a(j, l) * b(i));
      }
    }
  }
}

void Tensor3::add_sym_outer(double c, const Vector& a, const Vector& b) {
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      double* row = &data_[index(i, j, 0)];
      for (int l = 0; l < dim_; ++l) {
        row[l] += c * (a(i) * a(j) * b(l) + a(i) * b(j) * a(l) + b(i) * a(j) * a(l));
      }
    }
  }
}

Vector Tensor3::apply_twice(const Vector& u) const {
  Vector out = Vector::Zero(dim_);
  for (int i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (int j = 0; j < dim_; ++j) {
      const double* row = &data_[index(i, j, 0)];
      double inner = 0.0;
      for (int l = 0; l < dim_; ++l) inner += row[l] * u(l);
      s += inner * u(j);
    }
    out(i) = s;
  }
  return out;
}

double Tensor3::apply_thrice(const Vector& u) const { return u.dot(apply_twice(u)); }

void Tensor3::symmetrize() {
  Tensor3 out(dim_);
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      for (int l = 0; l < dim_; ++l) {
        const Tensor3& t = *this;
        out(i, j, l) = (t(i, j, l) + t(i, l, j) + t(j, i, l) + t(j, l, i) + t(l, i, j) +
                        t(l, j, i)) /
                       6.0;
      }
    }
  }
  data_ = std::move(out.data_);
}

double Tensor3::asymmetry() const {
  double worst = 0.0;
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      for (int l = 0; l < dim_; ++l) {
        const double x = (*this)(i, j, l);
        for (double y : {(*this)(i, l, j), (*this)(j, i, l), (*this)(j, l, i), (*this)(l, i, j),
                         (*this)(l, j, i)}) {
          worst = std::max(worst, std::abs(x - y));
        }
      }
    }
  }
  return worst;
}

double Tensor3::frobenius() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return std::sqrt(s);
}

double max_abs_diff(const Tensor3& a, const Tensor3& b) {
  if (a.dim() != b.dim()) throw ValidationError("tensor dimension mismatch");
  double worst = 0.0;
  for (std::size_t n = 0; n < a.data().size(); ++n) {
    worst = std::max(worst, std::abs(a.data()[n] - b.data()[n]));
  }
  return worst;
}

}  // namespace slda
