#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qchan/tensor.hpp"

namespace qchan {

struct LpFeasibility {
  bool feasible = false;
  double infeasibility = 0.0;  // optimal phase-1 objective
  std::size_t pivots = 0;
  Eigen::VectorXd x;
};

// Phase-1 simplex for {x >= 0 : A x = b} on a dense tableau, Bland's rule.
inline LpFeasibility simplex_feasibility(const Eigen::MatrixXd& a_in, const Eigen::VectorXd& b_in, double tol = 1e-9,
                                         std::size_t max_pivots = 1000000) {
  const Eigen::Index rows = a_in.rows(), cols = a_in.cols();
  require(b_in.size() == rows, "simplex: right-hand side has wrong length");
  Eigen::MatrixXd a = a_in;
  Eigen::VectorXd b = b_in;
  for (Eigen::Index r = 0; r < rows; ++r)
    if (b(r) < 0) {
      a.row(r) *= -1;
      b(r) *= -1;
    }
  // columns: original, artificials, rhs
  const Eigen::Index width = cols + rows + 1;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(rows + 1, width);
  t.topLeftCorner(rows, cols) = a;
  t.block(0, cols, rows, rows).setIdentity();
  t.col(width - 1).head(rows) = b;
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
  for (Eigen::Index r = 0; r < rows; ++r) basis[std::size_t(r)] = cols + r;
  // objective row: reduced costs of min sum(artificials)
  for (Eigen::Index r = 0; r < rows; ++r) t.row(rows) -= t.row(r);
  t.block(rows, cols, 1, rows).setZero();

  constexpr double eps = 1e-12;
  LpFeasibility out;
  while (out.pivots < max_pivots) {
    Eigen::Index enter = -1;
    for (Eigen::Index c = 0; c < cols + rows; ++c)
      if (t(rows, c) < -eps) {
        enter = c;
        break;
      }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (t(r, enter) <= eps) continue;
      const double ratio = t(r, width - 1) / t(r, enter);
      if (leave < 0 || ratio < best - eps || (std::abs(ratio - best) <= eps && basis[std::size_t(r)] < basis[std::size_t(leave)])) {
        leave = r;
        best = ratio;
      }
    }
    if (leave < 0) break;  // unbounded direction; cannot happen in phase 1
    t.row(leave) /= t(leave, enter);
    for (Eigen::Index r = 0; r <= rows; ++r)
      if (r != leave && t(r, enter) != 0.0) t.row(r) -= t(r, enter) * t.row(leave);
    basis[std::size_t(leave)] = enter;
    ++out.pivots;
  }
  out.infeasibility = -t(rows, width - 1);
  out.x = Eigen::VectorXd::Zero(cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    if (basis[std::size_t(r)] < cols) out.x(basis[std::size_t(r)]) = std::max(0.0, t(r, width - 1));
  out.feasible = out.infeasibility <= tol && (a_in * out.x - b_in).cwiseAbs().maxCoeff() <= tol;
  return out;
}

}  // namespace qchan
