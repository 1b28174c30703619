#pragma once

#include <functional>

#include "qchan/tensor.hpp"

namespace qchan {

enum class Verdict { Feasible, NumericallyInfeasible, Inconclusive };

inline std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Feasible:
      return "feasible";
    case Verdict::NumericallyInfeasible:
      return "numerically-infeasible";
    case Verdict::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

struct SolverOptions {
  double tol = 1e-7;
  std::size_t max_iter = 20000;
  std::size_t stall_window = 500;
  double stall_rel = 1e-10;
};

// Point in a product of matrix spaces.
using BlockPoint = std::vector<ComplexMatrix>;

inline double block_norm(const BlockPoint& p) {
  double s = 0;
  for (const auto& m : p) s += m.squaredNorm();
  return std::sqrt(s);
}

inline double block_distance(const BlockPoint& a, const BlockPoint& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).squaredNorm();
  return std::sqrt(s);
}

// Nearest PSD matrix in Frobenius norm (negative eigenvalues set to zero).
inline ComplexMatrix project_psd_cone(const ComplexMatrix& m) {
  const ComplexMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  const Eigen::VectorXd v = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * v.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

inline BlockPoint project_psd_product(const BlockPoint& p) {
  BlockPoint out;
  out.reserve(p.size());
  for (const auto& m : p) out.push_back(project_psd_cone(m));
  return out;
}

struct AlternatingResult {
  Verdict status = Verdict::Inconclusive;
  double residual = 0.0;
  std::size_t iterations = 0;
  BlockPoint point;  // satisfies the affine constraints exactly
};

// Alternates between the PSD product cone and an affine set. The residual is
// the distance from the current affine point to the cone.
// `cone` defaults to the PSD product cone; a face of it may be passed instead.
inline AlternatingResult alternating_feasibility(const BlockPoint& init, const std::function<BlockPoint(const BlockPoint&)>& affine,
                                                 const SolverOptions& opts = {},
                                                 std::function<BlockPoint(const BlockPoint&)> cone = project_psd_product) {
  AlternatingResult res;
  BlockPoint x = affine(init);
  std::vector<double> history;
  history.reserve(opts.max_iter + 1);
  for (std::size_t it = 0;; ++it) {
    const BlockPoint y = cone(x);
    res.residual = block_distance(x, y);
    res.iterations = it;
    history.push_back(res.residual);
    if (res.residual < opts.tol) {
      res.status = Verdict::Feasible;
      break;
    }
    if (it >= opts.stall_window) {
      const double old = history[it - opts.stall_window];
      if (std::abs(old - res.residual) <= opts.stall_rel * old) {
        res.status = Verdict::NumericallyInfeasible;
        break;
      }
    }
    if (it >= opts.max_iter) {
      res.status = Verdict::Inconclusive;
      break;
    }
    x = affine(y);
  }
  res.point = std::move(x);
  return res;
}

}  // namespace qchan
