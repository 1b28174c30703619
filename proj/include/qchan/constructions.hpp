#pragma once

#include <numeric>

#include "qchan/causality.hpp"
#include "qchan/scenarios.hpp"

namespace qchan {

inline std::string party_name(std::size_t k) {
  require(k < 26, "too many parties");
  return std::string(1, char('A' + k));
}

// ---------------------------------------------------------------------------
// Canonical channels

// Lambda(rho) = sum_{x,a} <x|rho|x> p(a|x) |a><a|
inline Channel canonical_channel_from_correlations(const Correlation& c) {
  c.validate();
  std::vector<Subsystem> in, out;
  for (std::size_t k = 0; k < c.n_parties; ++k) {
    in.push_back({party_name(k) + ".in", c.m, Role::UntrustedIn});
    out.push_back({party_name(k) + ".out", c.d, Role::UntrustedOut});
  }
  const std::size_t di = c.n_inputs(), dout = c.n_outcomes();
  ComplexMatrix choi = ComplexMatrix::Zero(Eigen::Index(di * dout), Eigen::Index(di * dout));
  for (std::size_t x = 0; x < di; ++x)
    for (std::size_t a = 0; a < dout; ++a) {
      const auto i = Eigen::Index(x * dout + a);
      choi(i, i) = std::max(0.0, c.at(a, x)) / double(di);
    }
  return Channel(SystemLayout(in), SystemLayout(out), std::move(choi));
}

// Decoheres the untrusted inputs, discards the trusted input and emits
// |a><a| (x) sigma_{a|x}. The trusted party is labelled "T".
inline Channel canonical_channel_from_assemblage(const Assemblage& as, double tol = kDefaultTol) {
  as.validate(tol);
  require(is_nonsignalling_assemblage(as, tol).ok, "assemblage is signalling");
  std::vector<Subsystem> in, out;
  for (std::size_t k = 0; k < as.n_untrusted; ++k) {
    in.push_back({party_name(k) + ".in", as.m, Role::UntrustedIn});
    out.push_back({party_name(k) + ".out", as.d, Role::UntrustedOut});
  }
  in.push_back({"T.in", as.d_B, Role::TrustedIn});
  out.push_back({"T.out", as.d_B, Role::TrustedOut});
  const std::size_t nx = as.n_inputs(), na = as.n_outcomes(), db = as.d_B;
  const std::size_t di = nx * db, dout = na * db;
  ComplexMatrix choi = ComplexMatrix::Zero(Eigen::Index(di * dout), Eigen::Index(di * dout));
  const auto b = Eigen::Index(db);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t t = 0; t < db; ++t) {
      const std::size_t i = x * db + t;
      for (std::size_t a = 0; a < na; ++a) {
        const auto off = Eigen::Index(i * dout + a * db);
        choi.block(off, off, b, b) = as.at(a, x) / double(di);
      }
    }
  return Channel(SystemLayout(in), SystemLayout(out), std::move(choi), tol);
}

// ---------------------------------------------------------------------------
// Circuit gallery

namespace detail {

inline ComplexVector ghz(std::size_t n) {
  ComplexVector v = ComplexVector::Zero(Eigen::Index(std::size_t(1) << n));
  v(0) = v(v.size() - 1) = 1.0 / std::sqrt(2.0);
  return v;
}

inline ComplexVector zeros(std::size_t n) { return ket(std::size_t(1) << n, 0); }

inline Subsystem qubit(const std::string& l, Role r = Role::Ancilla) { return {l, 2, r}; }

// Appends the PR-box wiring on the given registers: copy inputs, AND onto the
// second share of the correlated pair, dephase both outputs.
inline void pr_gates(std::vector<Gate>& g, const std::string& a_in, const std::string& b_in, const std::string& e1,
                     const std::string& e2, const std::string& pre) {
  g.push_back({gates::cnot(), {a_in, pre + "cA"}});
  g.push_back({gates::cnot(), {b_in, pre + "cB"}});
  g.push_back({gates::toffoli(), {pre + "cA", pre + "cB", e2}});
  g.push_back({gates::cnot(), {e1, pre + "dA"}});
  g.push_back({gates::cnot(), {e2, pre + "dB"}});
}

}  // namespace detail

// Bipartite PR box channel: p(a,b|x,y) = 1/2 [a xor b = xy].
inline CircuitChannel pr_box_channel() {
  using detail::qubit;
  CircuitChannel c;
  c.registers = SystemLayout({qubit("A.in", Role::UntrustedIn), qubit("B.in", Role::UntrustedIn), qubit("E1"), qubit("E2"),
                              qubit("E3"), qubit("cA"), qubit("cB"), qubit("dA"), qubit("dB")});
  // GHZ on E1 E2 E3 with E3 discarded gives the shared classical bit
  c.ancilla_prep = kron_vec(detail::ghz(3), detail::zeros(4));
  detail::pr_gates(c.gates, "A.in", "B.in", "E1", "E2", "");
  c.discard = {"A.in", "B.in", "E3", "cA", "cB", "dA", "dB"};
  c.keep = {{"A.out", Role::UntrustedOut, {"E1"}}, {"B.out", Role::UntrustedOut, {"E2"}}};
  return c;
}

// Local circuit on a shared |Phi+>: Alice applies H when x=0, Bob applies
// R_Y(-pi/4) or R_Y(pi/4); each outputs their half of the pair.
inline CircuitChannel singlet_tsirelson_channel() {
  using detail::qubit;
  ComplexMatrix u = kron(basis_projector(2, 0), gates::hadamard()) + kron(basis_projector(2, 1), identity(2));
  ComplexMatrix v = kron(basis_projector(2, 0), gates::ry(-kPi / 4)) + kron(basis_projector(2, 1), gates::ry(kPi / 4));
  CircuitChannel c;
  c.registers = SystemLayout({qubit("A.in", Role::UntrustedIn), qubit("B.in", Role::UntrustedIn), qubit("EA"), qubit("EB")});
  c.ancilla_prep = bell_phi_plus();
  c.gates = {{u, {"A.in", "EA"}}, {v, {"B.in", "EB"}}};
  c.discard = {"A.in", "B.in"};
  c.keep = {{"A.out", Role::UntrustedOut, {"EA"}}, {"B.out", Role::UntrustedOut, {"EB"}}};
  return c;
}

// Alice and Bob run the PR wiring on a classically correlated pair while
// Charlie (trusted) outputs a maximally mixed qubit.
inline CircuitChannel pq_steering_pr_channel() {
  using detail::qubit;
  CircuitChannel c;
  c.registers = SystemLayout({qubit("A.in", Role::UntrustedIn), qubit("B.in", Role::UntrustedIn), qubit("C.in", Role::TrustedIn),
                              qubit("E1"), qubit("E2"), qubit("R"), qubit("cA"), qubit("cB"), qubit("dA"), qubit("dB")});
  ComplexMatrix corr = 0.5 * (basis_projector(4, 0) + basis_projector(4, 3));
  c.ancilla_prep = kron(kron(corr, identity(2) / 2.0), basis_projector(16, 0));
  detail::pr_gates(c.gates, "A.in", "B.in", "E1", "E2", "");
  c.discard = {"A.in", "B.in", "C.in", "cA", "cB", "dA", "dB"};
  c.keep = {{"A.out", Role::UntrustedOut, {"E1"}}, {"B.out", Role::UntrustedOut, {"E2"}}, {"C.out", Role::TrustedOut, {"R"}}};
  return c;
}

// Tripartite channel mixing a PR box (weight 1-alpha) with the identity
// wiring (weight alpha); Charlie holds the flag W_C. Alice and Bob output
// ququarts (A W_A) and (B W_B); the outcome bit is the first qubit.
inline CircuitChannel pq_steering_alpha_channel(double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
  using detail::qubit;
  CircuitChannel c;
  c.registers = SystemLayout({qubit("A.in", Role::UntrustedIn), qubit("B.in", Role::UntrustedIn), qubit("C.in", Role::TrustedIn),
                              qubit("XA"), qubit("XB"), qubit("WA"), qubit("WB"), qubit("WC")});
  ComplexVector w = ComplexVector::Zero(8);
  w(0) = std::sqrt(alpha);
  w(7) = std::sqrt(1.0 - alpha);
  c.ancilla_prep = kron_vec(bell_phi_plus(), w);
  c.gates = {{gates::cswap(), {"WA", "A.in", "XA"}},
             {gates::cswap(), {"WB", "B.in", "XB"}},
             {gates::controlled(gates::pauli_x(), 3), {"XA", "XB", "WA", "A.in"}}};
  c.discard = {"C.in", "XA", "XB"};
  c.keep = {{"A.out", Role::UntrustedOut, {"A.in", "WA"}},
            {"B.out", Role::UntrustedOut, {"B.in", "WB"}},
            {"C.out", Role::TrustedOut, {"WC"}}};
  return c;
}

// Outcome bit of the alpha channel's ququart outputs.
inline std::vector<std::size_t> alpha_outcome_map() { return {0, 0, 1, 1}; }

// Shared |Phi+>, Bell measurement on (K, R_A), no correction. Alice outputs
// the ququart (K R_A), outcome a = 2k + r; Bob (trusted) outputs R_B.
inline CircuitChannel teleportation_channel() {
  using detail::qubit;
  CircuitChannel c;
  c.registers = SystemLayout({qubit("A.in", Role::UntrustedIn), qubit("B.in", Role::TrustedIn), qubit("RA"), qubit("RB")});
  c.ancilla_prep = bell_phi_plus();
  c.gates = {{gates::cnot(), {"A.in", "RA"}}, {gates::hadamard(), {"A.in"}}};
  c.discard = {"B.in"};
  c.keep = {{"A.out", Role::UntrustedOut, {"A.in", "RA"}}, {"B.out", Role::TrustedOut, {"RB"}}};
  return c;
}

// Pauli byproduct X^r Z^k for teleportation outcome a = 2k + r.
inline ComplexMatrix teleportation_byproduct(std::size_t a) {
  const std::size_t k = a / 2, r = a % 2;
  ComplexMatrix out = identity(2);
  if (k) out = gates::pauli_z() * out;
  if (r) out = gates::pauli_x() * out;
  return out;
}

// Joint Bell measurement across two parties; signalling.
inline CircuitChannel bell_measurement_channel() {
  using detail::qubit;
  CircuitChannel c;
  c.registers = SystemLayout({qubit("A.in", Role::UntrustedIn), qubit("B.in", Role::UntrustedIn), qubit("dA"), qubit("dB")});
  c.ancilla_prep = detail::zeros(2);
  c.gates = {{gates::cnot(), {"A.in", "B.in"}},
             {gates::hadamard(), {"A.in"}},
             {gates::cnot(), {"A.in", "dA"}},
             {gates::cnot(), {"B.in", "dB"}}};
  c.discard = {"dA", "dB"};
  c.keep = {{"A.out", Role::UntrustedOut, {"A.in"}}, {"B.out", Role::UntrustedOut, {"B.in"}}};
  return c;
}

// Outputs exchange inputs.
inline CircuitChannel swap_channel(std::size_t d = 2) {
  CircuitChannel c;
  c.registers = SystemLayout({{"A.in", d, Role::UntrustedIn}, {"B.in", d, Role::UntrustedIn}});
  c.keep = {{"A.out", Role::UntrustedOut, {"B.in"}}, {"B.out", Role::UntrustedOut, {"A.in"}}};
  return c;
}

// Party k outputs party k-1's input.
inline CircuitChannel cyclic_shift_channel(std::size_t n = 3, std::size_t d = 2) {
  CircuitChannel c;
  std::vector<Subsystem> regs;
  for (std::size_t k = 0; k < n; ++k) regs.push_back({party_name(k) + ".in", d, Role::UntrustedIn});
  c.registers = SystemLayout(regs);
  for (std::size_t k = 0; k < n; ++k)
    c.keep.push_back({party_name(k) + ".out", Role::UntrustedOut, {party_name((k + n - 1) % n) + ".in"}});
  return c;
}

// ---------------------------------------------------------------------------
// Projective realizations

// |psi> on K (x) B with projectors[k][x][a] on K.
struct ProjectiveRealization {
  std::size_t n_parties = 0, m = 0, d = 0, d_K = 1, d_B = 1;
  ComplexVector state;
  std::vector<std::vector<std::vector<ComplexMatrix>>> projectors;

  const ComplexMatrix& proj(std::size_t k, std::size_t a, std::size_t x) const { return projectors.at(k).at(x).at(a); }

  // prod_j Pi^{(order_j)} |psi>, parties applied in the given order.
  ComplexVector apply_word(const std::vector<std::size_t>& a, const std::vector<std::size_t>& x,
                           const std::vector<std::size_t>& order) const {
    ComplexVector v = state;
    const auto b = Eigen::Index(d_B);
    const auto k = Eigen::Index(d_K);
    for (auto p : order) {
      // (Pi (x) 1_B) v with v reshaped as K x B
      Eigen::Map<const ComplexMatrix> vm(v.data(), b, k);  // column-major: vm(j, i) = v[i*d_B + j]
      ComplexMatrix r = vm * proj(p, a[p], x[p]).transpose();
      v = Eigen::Map<ComplexVector>(r.data(), r.size());
    }
    return v;
  }

  double state_commutation_residual() const {
    std::vector<std::size_t> order(n_parties);
    std::iota(order.begin(), order.end(), 0);
    const auto adims = uniform_dims(n_parties, d), xdims = uniform_dims(n_parties, m);
    double worst = 0;
    for (std::size_t xi = 0; xi < ipow(m, n_parties); ++xi)
      for (std::size_t ai = 0; ai < ipow(d, n_parties); ++ai) {
        const auto a = digits_of(ai, adims), x = digits_of(xi, xdims);
        const ComplexVector ref = apply_word(a, x, order);
        auto perm = order;
        while (std::next_permutation(perm.begin(), perm.end()))
          worst = std::max(worst, (apply_word(a, x, perm) - ref).norm());
      }
    return worst;
  }

  void validate(double tol = 1e-8) const {
    require(n_parties >= 1 && m >= 1 && d >= 1, "realization: empty scenario");
    require(std::size_t(state.size()) == d_K * d_B, "realization: state dimension mismatch");
    require(std::abs(state.norm() - 1.0) <= tol, "realization: state is not normalized");
    require(projectors.size() == n_parties, "realization: projector table has wrong party count");
    for (std::size_t k = 0; k < n_parties; ++k) {
      require(projectors[k].size() == m, "realization: projector table has wrong input count");
      for (std::size_t x = 0; x < m; ++x) {
        require(projectors[k][x].size() == d, "realization: projector table has wrong outcome count");
        ComplexMatrix s = ComplexMatrix::Zero(Eigen::Index(d_K), Eigen::Index(d_K));
        for (const auto& p : projectors[k][x]) {
          require(std::size_t(p.rows()) == d_K && p.rows() == p.cols(), "realization: projector dimension mismatch");
          require(max_abs(p - p.adjoint()) <= tol && max_abs(p * p - p) <= tol, "realization: operator is not a projector");
          s += p;
        }
        require(max_abs(s - identity(d_K)) <= tol, "realization: projectors do not sum to identity");
      }
    }
    require(state_commutation_residual() <= tol, "realization: projectors do not commute on the state");
  }
};

// sigma_{a|x} = tr_K[(prod Pi (x) 1)|psi><psi|]
inline Assemblage assemblage_from_commuting_projectors(const ProjectiveRealization& r, double tol = 1e-8) {
  r.validate(tol);
  Assemblage as(r.n_parties, r.m, r.d, r.d_B);
  std::vector<std::size_t> order(r.n_parties);
  std::iota(order.begin(), order.end(), 0);
  const auto adims = uniform_dims(r.n_parties, r.d), xdims = uniform_dims(r.n_parties, r.m);
  const auto b = Eigen::Index(r.d_B), k = Eigen::Index(r.d_K);
  for (std::size_t xi = 0; xi < as.n_inputs(); ++xi)
    for (std::size_t ai = 0; ai < as.n_outcomes(); ++ai) {
      const ComplexVector phi = r.apply_word(digits_of(ai, adims), digits_of(xi, xdims), order);
      Eigen::Map<const ComplexMatrix> pm(phi.data(), b, k);
      ComplexMatrix s = pm * pm.adjoint();
      as.at(ai, xi) = 0.5 * (s + s.adjoint());
    }
  return as;
}

inline Correlation correlations_from_realization(const ProjectiveRealization& r, double tol = 1e-8) {
  return trace_assemblage(assemblage_from_commuting_projectors(r, tol));
}

// O_x = sum_j Pi_{j|x} (x) A_j with A_0 = 1 and A_j the transposition of |0>
// and |j>, so O_x |phi>|0> = sum_j Pi_{j|x}|phi>|j>.
inline ComplexMatrix almost_localizable_party_unitary(const std::vector<std::vector<ComplexMatrix>>& pis, std::size_t d) {
  const std::size_t m = pis.size();
  const std::size_t dk = std::size_t(pis[0][0].rows());
  const std::size_t blk = dk * d;
  ComplexMatrix u = ComplexMatrix::Zero(Eigen::Index(m * blk), Eigen::Index(m * blk));
  for (std::size_t x = 0; x < m; ++x) {
    ComplexMatrix o = ComplexMatrix::Zero(Eigen::Index(blk), Eigen::Index(blk));
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<std::size_t> perm(d);
      std::iota(perm.begin(), perm.end(), 0);
      std::swap(perm[0], perm[j]);
      o += kron(pis[x][j], gates::permutation(perm));
    }
    require(is_unitary(o, 1e-8), "party unitary is not unitary (invalid projector family)");
    u.block(Eigen::Index(x * blk), Eigen::Index(x * blk), Eigen::Index(blk), Eigen::Index(blk)) = o;
  }
  return u;
}

// Circuit on ancilla |psi>_{K R} |0>_{q_1} ... |0>_{q_N}: party i applies
// sum_x |x><x| (x) O_x on (in_i, K, q_i) in the given order and outputs q_i.
// When d_B > 1 the trusted party outputs R and its input is discarded.
inline CircuitChannel almost_localizable_from_realization(const ProjectiveRealization& r,
                                                          std::vector<std::size_t> party_order = {}) {
  r.validate();
  if (party_order.empty()) {
    party_order.resize(r.n_parties);
    std::iota(party_order.begin(), party_order.end(), 0);
  }
  require(party_order.size() == r.n_parties, "party order has wrong length");
  std::vector<Subsystem> regs;
  for (std::size_t k = 0; k < r.n_parties; ++k) regs.push_back({party_name(k) + ".in", r.m, Role::UntrustedIn});
  const bool trusted = r.d_B > 1;
  if (trusted) regs.push_back({"T.in", r.d_B, Role::TrustedIn});
  regs.push_back({"K", r.d_K, Role::Ancilla});
  regs.push_back({"R", r.d_B, Role::Ancilla});
  for (std::size_t k = 0; k < r.n_parties; ++k) regs.push_back({"q" + party_name(k), r.d, Role::Ancilla});
  CircuitChannel c;
  c.registers = SystemLayout(regs);
  c.ancilla_prep = kron_vec(r.state, ket(ipow(r.d, r.n_parties), 0));
  for (auto k : party_order)
    c.gates.push_back({almost_localizable_party_unitary(r.projectors.at(k), r.d),
                       {party_name(k) + ".in", "K", "q" + party_name(k)}});
  for (std::size_t k = 0; k < r.n_parties; ++k) {
    c.discard.push_back(party_name(k) + ".in");
    c.keep.push_back({party_name(k) + ".out", Role::UntrustedOut, {"q" + party_name(k)}});
  }
  c.discard.push_back("K");
  if (trusted) {
    c.discard.push_back("T.in");
    c.keep.push_back({"T.out", Role::TrustedOut, {"R"}});
  } else {
    c.discard.push_back("R");
  }
  return c;
}

// Tensor-product realization: each party measures a local register of a
// shared state |psi> on K_1 ... K_N (x) B. local[k][x][a] act on K_k.
inline ProjectiveRealization tensor_product_realization(const ComplexVector& psi, const std::vector<std::size_t>& k_dims,
                                                        std::size_t d_B,
                                                        const std::vector<std::vector<std::vector<ComplexMatrix>>>& local) {
  ProjectiveRealization r;
  r.n_parties = k_dims.size();
  r.m = local.at(0).size();
  r.d = local.at(0).at(0).size();
  r.d_K = product(k_dims);
  r.d_B = d_B;
  r.state = psi;
  r.projectors.resize(r.n_parties);
  for (std::size_t k = 0; k < r.n_parties; ++k) {
    r.projectors[k].resize(r.m);
    for (std::size_t x = 0; x < r.m; ++x)
      for (std::size_t a = 0; a < r.d; ++a) {
        std::vector<ComplexMatrix> f;
        for (std::size_t j = 0; j < r.n_parties; ++j) f.push_back(j == k ? local[k][x][a] : identity(k_dims[j]));
        r.projectors[k][x].push_back(kron(f));
      }
  }
  return r;
}

// Rank-one projectors onto the columns of a unitary.
inline std::vector<ComplexMatrix> basis_projectors(const ComplexMatrix& u) {
  std::vector<ComplexMatrix> out;
  for (Eigen::Index i = 0; i < u.cols(); ++i) out.push_back(projector(u.col(i)));
  return out;
}

// Z/X on Alice and the rotated pair on Bob on |Phi+>: the Tsirelson-optimal
// quantum realization.
inline ProjectiveRealization tsirelson_realization() {
  std::vector<std::vector<std::vector<ComplexMatrix>>> local(2);
  local[0] = {basis_projectors(identity(2)), basis_projectors(gates::hadamard())};
  local[1] = {basis_projectors(gates::ry(kPi / 4)), basis_projectors(gates::ry(-kPi / 4))};
  return tensor_product_realization(bell_phi_plus(), {2, 2}, 1, local);
}

// ---------------------------------------------------------------------------
// GHJW realizations (one untrusted party)

struct GhjwAssemblageRealization {
  ComplexVector state;                           // on R (x) B, R ~ B
  std::vector<std::vector<ComplexMatrix>> povms;  // [x][a] on R
  double residual = 0.0;
};

// |psi> = sum_i |i> (x) sqrt(rho)|i>, so tr_R[(M (x) 1)psi psi^dag] = sqrt(rho) M^T sqrt(rho).
inline ComplexVector ghjw_purification(const ComplexMatrix& rho) {
  const std::size_t db = std::size_t(rho.rows());
  const ComplexMatrix s = psd_sqrt(rho);
  ComplexVector psi(Eigen::Index(db * db));
  for (std::size_t i = 0; i < db; ++i) psi.segment(Eigen::Index(i * db), Eigen::Index(db)) = s.col(Eigen::Index(i));
  return psi;
}

inline ComplexMatrix reduce_first(const ComplexVector& psi, const ComplexMatrix& m, std::size_t d1, std::size_t d2) {
  ComplexMatrix full = kron(m, identity(d2)) * psi * psi.adjoint();
  std::vector<bool> mask{true, false};
  return partial_trace(full, {d1, d2}, mask);
}

inline GhjwAssemblageRealization ghjw_realize_assemblage(const Assemblage& as, double tol = 1e-9, double cutoff = 1e-10) {
  require(as.n_untrusted == 1, "GHJW realization is only available for one untrusted party");
  as.validate(tol);
  require(is_nonsignalling_assemblage(as, tol).ok, "assemblage is signalling");
  const std::size_t db = as.d_B;
  const ComplexMatrix rho = as.rho_B(0);
  const ComplexMatrix inv = pinv_sqrt(rho, cutoff);
  const ComplexMatrix comp = (identity(db) - support_projector(rho, cutoff)).transpose();
  GhjwAssemblageRealization out;
  out.state = ghjw_purification(rho);
  out.povms.resize(as.m);
  for (std::size_t x = 0; x < as.m; ++x) {
    for (std::size_t a = 0; a < as.d; ++a) {
      ComplexMatrix mx = (inv * as.at(a, x) * inv).transpose();
      if (a == 0) mx += comp;
      out.povms[x].push_back(0.5 * (mx + mx.adjoint()));
    }
    for (std::size_t a = 0; a < as.d; ++a)
      out.residual = std::max(out.residual, max_abs(reduce_first(out.state, out.povms[x][a], db, db) - as.at(a, x)));
  }
  return out;
}

struct GhjwTeleportageRealization {
  ComplexVector state;               // on R (x) B
  std::vector<ComplexMatrix> povm;   // [a] on K (x) R
  double residual = 0.0;
};

// Forward map of a realization: T_a(rho) = tr_{KR}[(M_a (x) 1_B)(rho (x) psi psi^dag)].
inline ComplexMatrix ghjw_forward(const GhjwTeleportageRealization& g, std::size_t a, const ComplexMatrix& rho,
                                  std::size_t dk, std::size_t db) {
  const ComplexMatrix full = kron(g.povm[a], identity(db)) * kron(rho, g.state * g.state.adjoint());
  std::vector<bool> mask{true, true, false};
  return partial_trace(full, {dk, db, db}, mask);
}

inline GhjwTeleportageRealization ghjw_realize_teleportage(const Teleportage& t, double tol = 1e-9, double cutoff = 1e-10) {
  require(t.n_parties() == 1, "GHJW realization is only available for one untrusted party");
  t.validate(tol);
  require(is_nonsignalling_teleportage(t, tol).ok, "teleportage is signalling");
  const std::size_t dk = t.dim_K(), db = t.d_B;
  // fixed rho_B from sum_a J_a = 1_K (x) rho_B
  const ComplexMatrix rho = partial_trace(t.total_choi(), {dk, db}, {true, false}) / double(dk);
  const ComplexMatrix w = kron(identity(dk), pinv_sqrt(rho, cutoff));
  GhjwTeleportageRealization out;
  out.state = ghjw_purification(rho);
  const ComplexMatrix comp = kron(identity(dk), (identity(db) - support_projector(rho, cutoff)).transpose());
  for (std::size_t a = 0; a < t.n_outcomes(); ++a) {
    ComplexMatrix ma = (w * t.elements[a] * w).transpose();
    if (a == 0) ma += comp;
    out.povm.push_back(0.5 * (ma + ma.adjoint()));
  }
  for (std::size_t a = 0; a < t.n_outcomes(); ++a)
    for (std::size_t i = 0; i < dk; ++i)
      for (std::size_t j = 0; j < dk; ++j) {
        const auto b = Eigen::Index(db);
        const ComplexMatrix want = t.elements[a].block(Eigen::Index(i) * b, Eigen::Index(j) * b, b, b);
        out.residual = std::max(out.residual, max_abs(ghjw_forward(out, a, matrix_unit(dk, i, j), dk, db) - want));
      }
  return out;
}

// ---------------------------------------------------------------------------
// Named gallery

struct NamedCircuit {
  std::string name;
  CircuitChannel circuit;
};

// Channels that are causal by construction.
inline std::vector<NamedCircuit> causal_gallery() {
  return {{"pr-box", pr_box_channel()},
          {"singlet", singlet_tsirelson_channel()},
          {"pq-steering-pr", pq_steering_pr_channel()},
          {"pq-steering-alpha", pq_steering_alpha_channel(1.0 / 6.0)},
          {"teleportation", teleportation_channel()},
          {"almost-localizable-tsirelson", almost_localizable_from_realization(tsirelson_realization())}};
}

inline std::vector<NamedCircuit> signalling_gallery() {
  return {{"swap", swap_channel()}, {"cyclic-shift", cyclic_shift_channel()}, {"bell-measurement", bell_measurement_channel()}};
}

inline CircuitChannel circuit_by_name(const std::string& name, double alpha = 1.0 / 6.0) {
  if (name == "pq-steering-alpha") return pq_steering_alpha_channel(alpha);
  for (auto& g : causal_gallery())
    if (g.name == name) return g.circuit;
  for (auto& g : signalling_gallery())
    if (g.name == name) return g.circuit;
  throw ValidationError("unknown construction '" + name + "'");
}

}  // namespace qchan
