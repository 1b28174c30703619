#pragma once

// Test-only reference implementations. These deliberately avoid the library's
// strided kernels and build everything from explicit full-size matrices.

#include <functional>

#include "qchan/tensor.hpp"

namespace oracle {

using qchan::Complex;
using qchan::ComplexMatrix;
using qchan::ComplexVector;

inline std::vector<std::size_t> digits(std::size_t idx, const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> out(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    out[k] = idx % dims[k];
    idx /= dims[k];
  }
  return out;
}

inline std::size_t join(const std::vector<std::size_t>& dig, const std::vector<std::size_t>& dims) {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) idx = idx * dims[k] + dig[k];
  return idx;
}

// Full-space matrix of a gate acting on `targets`, built entry by entry.
inline ComplexMatrix embed(const ComplexMatrix& u, const std::vector<std::size_t>& dims,
                           const std::vector<std::size_t>& targets) {
  std::size_t total = 1;
  for (auto d : dims) total *= d;
  std::vector<std::size_t> tdims;
  for (auto t : targets) tdims.push_back(dims[t]);
  ComplexMatrix out = ComplexMatrix::Zero(Eigen::Index(total), Eigen::Index(total));
  for (std::size_t r = 0; r < total; ++r)
    for (std::size_t c = 0; c < total; ++c) {
      auto dr = digits(r, dims), dc = digits(c, dims);
      bool same = true;
      for (std::size_t k = 0; k < dims.size(); ++k)
        if (std::find(targets.begin(), targets.end(), k) == targets.end() && dr[k] != dc[k]) same = false;
      if (!same) continue;
      std::vector<std::size_t> tr, tc;
      for (auto t : targets) {
        tr.push_back(dr[t]);
        tc.push_back(dc[t]);
      }
      out(Eigen::Index(r), Eigen::Index(c)) = u(Eigen::Index(join(tr, tdims)), Eigen::Index(join(tc, tdims)));
    }
  return out;
}

// Partial trace by brute-force summation over digit tuples.
inline ComplexMatrix ptrace(const ComplexMatrix& m, const std::vector<std::size_t>& dims, const std::vector<bool>& traced) {
  std::vector<std::size_t> kd;
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (!traced[k]) kd.push_back(dims[k]);
  std::size_t dk = 1;
  for (auto d : kd) dk *= d;
  ComplexMatrix out = ComplexMatrix::Zero(Eigen::Index(dk), Eigen::Index(dk));
  std::size_t total = std::size_t(m.rows());
  for (std::size_t r = 0; r < total; ++r)
    for (std::size_t c = 0; c < total; ++c) {
      auto dr = digits(r, dims), dc = digits(c, dims);
      bool diag = true;
      std::vector<std::size_t> kr, kc;
      for (std::size_t k = 0; k < dims.size(); ++k) {
        if (traced[k]) {
          if (dr[k] != dc[k]) diag = false;
        } else {
          kr.push_back(dr[k]);
          kc.push_back(dc[k]);
        }
      }
      if (diag) out(Eigen::Index(join(kr, kd)), Eigen::Index(join(kc, kd))) += m(Eigen::Index(r), Eigen::Index(c));
    }
  return out;
}

// Density-matrix simulation: rho_in (x) ancilla, full unitary, partial trace.
// The input registers must come first in `dims`.
inline ComplexMatrix simulate(const ComplexMatrix& rho_in, const ComplexMatrix& ancilla, const std::vector<std::size_t>& dims,
                              const std::vector<std::pair<ComplexMatrix, std::vector<std::size_t>>>& gate_list,
                              const std::vector<bool>& traced) {
  ComplexMatrix anc = ancilla.cols() == 1 ? ComplexMatrix(ancilla * ancilla.adjoint()) : ancilla;
  ComplexMatrix rho = qchan::kron(rho_in, anc);
  for (const auto& [u, t] : gate_list) {
    ComplexMatrix full = embed(u, dims, t);
    rho = full * rho * full.adjoint();
  }
  return ptrace(rho, dims, traced);
}

// Choi state (inputs first) of a map given as a function on matrices.
inline ComplexMatrix choi_of(std::size_t din, std::size_t dout, const std::function<ComplexMatrix(const ComplexMatrix&)>& f) {
  ComplexMatrix out = ComplexMatrix::Zero(Eigen::Index(din * dout), Eigen::Index(din * dout));
  for (std::size_t i = 0; i < din; ++i)
    for (std::size_t j = 0; j < din; ++j) {
      ComplexMatrix e = ComplexMatrix::Zero(Eigen::Index(din), Eigen::Index(din));
      e(Eigen::Index(i), Eigen::Index(j)) = 1;
      out.block(Eigen::Index(i * dout), Eigen::Index(j * dout), Eigen::Index(dout), Eigen::Index(dout)) = f(e) / double(din);
    }
  return out;
}

// Measure-and-prepare PR map: K_{x,y,r} = |r, r xor xy><x,y| / sqrt 2.
inline std::vector<ComplexMatrix> pr_kraus() {
  std::vector<ComplexMatrix> ks;
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t r = 0; r < 2; ++r) {
        ComplexMatrix k = ComplexMatrix::Zero(4, 4);
        k(Eigen::Index(r * 2 + (r ^ (x & y))), Eigen::Index(x * 2 + y)) = 1.0 / std::sqrt(2.0);
        ks.push_back(k);
      }
  return ks;
}

inline double pr_probability(std::size_t a, std::size_t b, std::size_t x, std::size_t y) {
  return ((a ^ b) == (x & y)) ? 0.5 : 0.0;
}

}  // namespace oracle
