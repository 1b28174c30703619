#pragma once

#include <random>

#include "qchan/tensor.hpp"

namespace qchan {

// Haar-ish random objects for tests and property checks.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 12345) : gen_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen_); }

  ComplexMatrix ginibre(std::size_t r, std::size_t c) {
    ComplexMatrix m{Eigen::Index(r), Eigen::Index(c)};
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = Complex(normal(), normal());
    return m;
  }

  ComplexVector state(std::size_t d) {
    ComplexVector v = ginibre(d, 1).col(0);
    return v / v.norm();
  }

  ComplexMatrix unitary(std::size_t d) {
    Eigen::HouseholderQR<ComplexMatrix> qr(ginibre(d, d));
    ComplexMatrix q = qr.householderQ();
    ComplexMatrix r = qr.matrixQR();
    for (Eigen::Index i = 0; i < q.cols(); ++i) {
      const Complex diag = r(i, i);
      if (std::abs(diag) > 0) q.col(i) *= diag / std::abs(diag);
    }
    return q;
  }

  // Density matrix of rank `rank` (full rank when 0).
  ComplexMatrix density(std::size_t d, std::size_t rank = 0) {
    ComplexMatrix g = ginibre(d, rank == 0 ? d : rank);
    ComplexMatrix rho = g * g.adjoint();
    return rho / rho.trace().real();
  }

  ComplexMatrix hermitian(std::size_t d) {
    ComplexMatrix g = ginibre(d, d);
    return 0.5 * (g + g.adjoint());
  }

  std::vector<double> probabilities(std::size_t n) {
    std::vector<double> p(n);
    double s = 0;
    for (auto& v : p) {
      v = -std::log(1.0 - uniform());
      s += v;
    }
    for (auto& v : p) v /= s;
    return p;
  }

  // Random POVM with n elements on C^d.
  std::vector<ComplexMatrix> povm(std::size_t d, std::size_t n) {
    std::vector<ComplexMatrix> g;
    ComplexMatrix total = ComplexMatrix::Zero(Eigen::Index(d), Eigen::Index(d));
    for (std::size_t k = 0; k < n; ++k) {
      ComplexMatrix a = ginibre(d, d);
      g.push_back(a * a.adjoint());
      total += g.back();
    }
    ComplexMatrix s = pinv_sqrt(total, 1e-14);
    for (auto& e : g) e = s * e * s;
    return g;
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace qchan
