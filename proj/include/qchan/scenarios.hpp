#pragma once

#include <optional>

#include "qchan/channel.hpp"

namespace qchan {

// Joint indices: party 1 is the most significant digit. Tables are laid out
// as [x_index][a_index].
inline std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  while (e-- > 0) r *= b;
  return r;
}

inline std::vector<std::size_t> uniform_dims(std::size_t n, std::size_t d) { return std::vector<std::size_t>(n, d); }

struct NsCheck {
  bool ok = true;
  double max_residual = 0.0;
};

struct Correlation {
  std::size_t n_parties = 0, m = 0, d = 0;
  std::vector<double> table;

  Correlation() = default;
  Correlation(std::size_t n, std::size_t m_, std::size_t d_) : n_parties(n), m(m_), d(d_), table(ipow(m_, n) * ipow(d_, n), 0.0) {}

  std::size_t n_inputs() const { return ipow(m, n_parties); }
  std::size_t n_outcomes() const { return ipow(d, n_parties); }
  double& at(std::size_t a_idx, std::size_t x_idx) { return table.at(x_idx * n_outcomes() + a_idx); }
  double at(std::size_t a_idx, std::size_t x_idx) const { return table.at(x_idx * n_outcomes() + a_idx); }
  double p(const std::vector<std::size_t>& a, const std::vector<std::size_t>& x) const {
    return at(index_of_digits(a, uniform_dims(n_parties, d)), index_of_digits(x, uniform_dims(n_parties, m)));
  }

  void validate(double tol = kDefaultTol) const {
    require(n_parties >= 1 && m >= 1 && d >= 1, "correlation: empty scenario");
    require(table.size() == n_inputs() * n_outcomes(), "correlation: table size does not match scenario");
    for (std::size_t x = 0; x < n_inputs(); ++x) {
      double s = 0;
      for (std::size_t a = 0; a < n_outcomes(); ++a) {
        const double v = at(a, x);
        require(std::isfinite(v), "correlation: non-finite entry");
        require(v >= -1e-12, "correlation: negative probability");
        s += v;
      }
      require(std::abs(s - 1.0) <= tol, "correlation: slice for input " + std::to_string(x) + " does not sum to 1");
    }
  }
};

struct Assemblage {
  std::size_t n_untrusted = 0, m = 0, d = 0, d_B = 1;
  std::vector<ComplexMatrix> elements;

  Assemblage() = default;
  Assemblage(std::size_t n, std::size_t m_, std::size_t d_, std::size_t dB)
      : n_untrusted(n), m(m_), d(d_), d_B(dB),
        elements(ipow(m_, n) * ipow(d_, n), ComplexMatrix::Zero(Eigen::Index(dB), Eigen::Index(dB))) {}

  std::size_t n_inputs() const { return ipow(m, n_untrusted); }
  std::size_t n_outcomes() const { return ipow(d, n_untrusted); }
  ComplexMatrix& at(std::size_t a_idx, std::size_t x_idx) { return elements.at(x_idx * n_outcomes() + a_idx); }
  const ComplexMatrix& at(std::size_t a_idx, std::size_t x_idx) const { return elements.at(x_idx * n_outcomes() + a_idx); }

  ComplexMatrix rho_B(std::size_t x_idx = 0) const {
    ComplexMatrix r = ComplexMatrix::Zero(Eigen::Index(d_B), Eigen::Index(d_B));
    for (std::size_t a = 0; a < n_outcomes(); ++a) r += at(a, x_idx);
    return r;
  }

  void validate(double tol = kDefaultTol) const {
    require(n_untrusted >= 1 && m >= 1 && d >= 1 && d_B >= 1, "assemblage: empty scenario");
    require(elements.size() == n_inputs() * n_outcomes(), "assemblage: element count does not match scenario");
    for (const auto& e : elements) {
      require(std::size_t(e.rows()) == d_B && std::size_t(e.cols()) == d_B, "assemblage: element has wrong dimension");
      require(e.allFinite(), "assemblage: non-finite entry");
      require(is_hermitian(e, tol) && min_eigenvalue(e) >= -tol, "assemblage: element is not positive semidefinite");
    }
    const ComplexMatrix r0 = rho_B(0);
    require(std::abs(r0.trace() - 1.0) <= tol, "assemblage: reduced state does not have unit trace");
    for (std::size_t x = 1; x < n_inputs(); ++x)
      require(max_abs(rho_B(x) - r0) <= tol, "assemblage: reduced state depends on the inputs");
  }
};

struct DistributedMeasurement {
  std::vector<std::size_t> input_dims;
  std::size_t d = 0;
  std::vector<ComplexMatrix> elements;  // indexed by a_idx, operators on (x)K_j

  std::size_t n_parties() const { return input_dims.size(); }
  std::size_t n_outcomes() const { return ipow(d, n_parties()); }
  std::size_t dim() const { return product(input_dims); }

  void validate(double tol = kDefaultTol) const {
    require(!input_dims.empty() && d >= 1, "measurement: empty scenario");
    require(elements.size() == n_outcomes(), "measurement: element count does not match scenario");
    ComplexMatrix s = ComplexMatrix::Zero(Eigen::Index(dim()), Eigen::Index(dim()));
    for (const auto& e : elements) {
      require(std::size_t(e.rows()) == dim() && std::size_t(e.cols()) == dim(), "measurement: element has wrong dimension");
      require(is_hermitian(e, tol) && min_eigenvalue(e) >= -tol, "measurement: element is not positive semidefinite");
      s += e;
    }
    require(max_abs(s - identity(dim())) <= tol, "measurement: elements do not sum to identity");
  }
};

// Instrument from (x)K_j to the trusted system B. Each outcome is stored as
// its unnormalized Choi block J_a = sum_ij |i><j| (x) T_a(|i><j|) on K (x) B.
struct Teleportage {
  std::vector<std::size_t> input_dims;
  std::size_t d = 0, d_B = 1;
  std::vector<ComplexMatrix> elements;

  std::size_t n_parties() const { return input_dims.size(); }
  std::size_t n_outcomes() const { return ipow(d, n_parties()); }
  std::size_t dim_K() const { return product(input_dims); }

  // T_a(rho) = tr_K[(rho^T (x) 1) J_a]
  ComplexMatrix apply(std::size_t a_idx, const ComplexMatrix& rho) const {
    const auto b = Eigen::Index(d_B);
    const auto& j = elements.at(a_idx);
    ComplexMatrix out = ComplexMatrix::Zero(b, b);
    for (std::size_t r = 0; r < dim_K(); ++r)
      for (std::size_t c = 0; c < dim_K(); ++c) {
        const Complex v = rho(Eigen::Index(r), Eigen::Index(c));
        if (v != Complex(0)) out += v * j.block(Eigen::Index(r) * b, Eigen::Index(c) * b, b, b);
      }
    return out;
  }

  ComplexMatrix total_choi() const {
    ComplexMatrix s = ComplexMatrix::Zero(Eigen::Index(dim_K() * d_B), Eigen::Index(dim_K() * d_B));
    for (const auto& e : elements) s += e;
    return s;
  }

  void validate(double tol = kDefaultTol) const {
    require(!input_dims.empty() && d >= 1 && d_B >= 1, "teleportage: empty scenario");
    require(elements.size() == n_outcomes(), "teleportage: element count does not match scenario");
    const std::size_t n = dim_K() * d_B;
    for (const auto& e : elements) {
      require(std::size_t(e.rows()) == n && std::size_t(e.cols()) == n, "teleportage: element has wrong dimension");
      require(is_hermitian(e, tol) && min_eigenvalue(e) >= -tol, "teleportage: element is not completely positive");
    }
    std::vector<std::size_t> dims = input_dims;
    dims.push_back(d_B);
    std::vector<bool> mask(dims.size(), false);
    mask.back() = true;
    require(max_abs(partial_trace(total_choi(), dims, mask) - identity(dim_K())) <= tol,
            "teleportage: instrument is not trace preserving");
  }
};

// ---------------------------------------------------------------------------
// Non-signalling predicates

namespace detail {

// Sums table-like entries over the outcomes of parties outside `keep`.
template <class T, class Get>
std::vector<T> marginal_over(std::size_t n, std::size_t d, const std::vector<bool>& keep, Get get, T zero) {
  std::size_t kept = 0;
  for (bool k : keep) kept += k;
  std::vector<T> out(ipow(d, kept), zero);
  const auto dims = uniform_dims(n, d);
  for (std::size_t a = 0; a < ipow(d, n); ++a) {
    const auto dig = digits_of(a, dims);
    std::size_t idx = 0;
    for (std::size_t k = 0; k < n; ++k)
      if (keep[k]) idx = idx * d + dig[k];
    out[idx] = out[idx] + get(a);
  }
  return out;
}

}  // namespace detail

inline NsCheck is_nonsignalling_correlation(const Correlation& c, double tol = kDefaultTol) {
  NsCheck res;
  const std::size_t n = c.n_parties;
  const auto xdims = uniform_dims(n, c.m);
  for (std::size_t mask = 1; mask + 1 < (std::size_t(1) << n); ++mask) {
    std::vector<bool> keep(n);
    for (std::size_t k = 0; k < n; ++k) keep[k] = (mask >> k) & 1;
    for (std::size_t x = 0; x < c.n_inputs(); ++x) {
      auto xd = digits_of(x, xdims);
      auto base = xd;
      for (std::size_t k = 0; k < n; ++k)
        if (!keep[k]) base[k] = 0;
      const std::size_t x0 = index_of_digits(base, xdims);
      if (x0 == x) continue;
      auto m1 = detail::marginal_over<double>(n, c.d, keep, [&](std::size_t a) { return c.at(a, x); }, 0.0);
      auto m0 = detail::marginal_over<double>(n, c.d, keep, [&](std::size_t a) { return c.at(a, x0); }, 0.0);
      for (std::size_t i = 0; i < m1.size(); ++i) res.max_residual = std::max(res.max_residual, std::abs(m1[i] - m0[i]));
    }
  }
  res.ok = res.max_residual <= tol;
  return res;
}

inline NsCheck is_nonsignalling_assemblage(const Assemblage& as, double tol = kDefaultTol) {
  NsCheck res;
  const std::size_t n = as.n_untrusted;
  const auto xdims = uniform_dims(n, as.m);
  const ComplexMatrix zero = ComplexMatrix::Zero(Eigen::Index(as.d_B), Eigen::Index(as.d_B));
  // keep-sets include the empty set, which is the fixed-rho_B condition
  for (std::size_t mask = 0; mask + 1 < (std::size_t(1) << n); ++mask) {
    std::vector<bool> keep(n);
    for (std::size_t k = 0; k < n; ++k) keep[k] = (mask >> k) & 1;
    for (std::size_t x = 0; x < as.n_inputs(); ++x) {
      auto base = digits_of(x, xdims);
      for (std::size_t k = 0; k < n; ++k)
        if (!keep[k]) base[k] = 0;
      const std::size_t x0 = index_of_digits(base, xdims);
      if (x0 == x) continue;
      auto m1 = detail::marginal_over<ComplexMatrix>(n, as.d, keep, [&](std::size_t a) { return as.at(a, x); }, zero);
      auto m0 = detail::marginal_over<ComplexMatrix>(n, as.d, keep, [&](std::size_t a) { return as.at(a, x0); }, zero);
      for (std::size_t i = 0; i < m1.size(); ++i) res.max_residual = std::max(res.max_residual, max_abs(m1[i] - m0[i]));
    }
  }
  res.ok = res.max_residual <= tol;
  return res;
}

namespace detail {

// Residual of `op` (on factors dims) from the form  X (x) 1_{S2}/1  where S2
// are the factors flagged in `free`.
inline double product_with_identity_residual(const ComplexMatrix& op, const std::vector<std::size_t>& dims,
                                             const std::vector<bool>& free) {
  std::size_t d_free = 1;
  std::vector<std::size_t> order, kept_dims;
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (!free[k]) order.push_back(k);
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (free[k]) {
      order.push_back(k);
      d_free *= dims[k];
    }
  const ComplexMatrix reduced = partial_trace(op, dims, free) / double(d_free);
  ComplexMatrix candidate = kron(reduced, identity(d_free));
  std::vector<std::size_t> perm_dims;
  for (auto k : order) perm_dims.push_back(dims[k]);
  // candidate lives on factors in `order`; bring back to original order
  std::vector<std::size_t> inverse(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) inverse[order[i]] = i;
  candidate = permute_subsystems(candidate, perm_dims, inverse);
  return max_abs(op - candidate);
}

}  // namespace detail

inline NsCheck is_nonsignalling_distributed_measurement(const DistributedMeasurement& dm, double tol = kDefaultTol) {
  NsCheck res;
  const std::size_t n = dm.n_parties();
  const ComplexMatrix zero = ComplexMatrix::Zero(Eigen::Index(dm.dim()), Eigen::Index(dm.dim()));
  for (std::size_t mask = 0; mask + 1 < (std::size_t(1) << n); ++mask) {
    std::vector<bool> keep(n), free(n);
    for (std::size_t k = 0; k < n; ++k) {
      keep[k] = (mask >> k) & 1;
      free[k] = !keep[k];
    }
    auto marg = detail::marginal_over<ComplexMatrix>(n, dm.d, keep, [&](std::size_t a) { return dm.elements[a]; }, zero);
    for (const auto& op : marg)
      res.max_residual = std::max(res.max_residual, detail::product_with_identity_residual(op, dm.input_dims, free));
  }
  res.ok = res.max_residual <= tol;
  return res;
}

inline NsCheck is_nonsignalling_teleportage(const Teleportage& t, double tol = kDefaultTol) {
  NsCheck res;
  const std::size_t n = t.n_parties();
  std::vector<std::size_t> dims = t.input_dims;
  dims.push_back(t.d_B);
  const std::size_t full = t.dim_K() * t.d_B;
  const ComplexMatrix zero = ComplexMatrix::Zero(Eigen::Index(full), Eigen::Index(full));
  // the all-free case is the fixed rho_B condition
  for (std::size_t mask = 0; mask + 1 < (std::size_t(1) << n); ++mask) {
    std::vector<bool> keep(n), free(n + 1, false);
    for (std::size_t k = 0; k < n; ++k) {
      keep[k] = (mask >> k) & 1;
      free[k] = !keep[k];
    }
    auto marg = detail::marginal_over<ComplexMatrix>(n, t.d, keep, [&](std::size_t a) { return t.elements[a]; }, zero);
    for (const auto& op : marg)
      res.max_residual = std::max(res.max_residual, detail::product_with_identity_residual(op, dims, free));
  }
  res.ok = res.max_residual <= tol;
  return res;
}

// ---------------------------------------------------------------------------
// Extraction from channels

// Per-party orthonormal bases (columns). An empty list means computational
// bases everywhere.
using Bases = std::vector<ComplexMatrix>;

namespace detail {

struct PartyView {
  std::vector<Party> parties;
  std::vector<Party> untrusted;
  std::optional<Party> trusted;
  SystemLayout in_party_order, out_party_order;
};

inline PartyView party_view(const Channel& ch) {
  PartyView v;
  v.parties = ch.parties();
  std::vector<std::string> in_l, out_l;
  for (const auto& p : v.parties) {
    if (p.trusted)
      v.trusted = p;
    else
      v.untrusted.push_back(p);
    in_l.push_back(p.in_label);
    out_l.push_back(p.out_label);
  }
  v.in_party_order = ch.layout_in().select(in_l);
  v.out_party_order = ch.layout_out().select(out_l);
  return v;
}

inline ComplexMatrix basis_for(const Bases& bases, std::size_t k, std::size_t dim) {
  if (bases.empty()) return identity(dim);
  require(k < bases.size(), "missing basis for party " + std::to_string(k));
  const ComplexMatrix& b = bases[k];
  require(std::size_t(b.rows()) == dim && std::size_t(b.cols()) == dim, "basis for party " + std::to_string(k) + " has wrong dimension");
  require(max_abs(b.adjoint() * b - identity(dim)) <= 1e-9, "basis for party " + std::to_string(k) + " is not orthonormal");
  return b;
}

// Runs the channel on an input given in party order, returns the output in
// party order.
inline ComplexMatrix run_party_order(const Channel& ch, const PartyView& v, const ComplexMatrix& rho_party) {
  ComplexMatrix rho = permute_subsystems(rho_party, v.in_party_order, ch.layout_in().labels());
  ComplexMatrix out = qchan::apply(ch, rho);
  return permute_subsystems(out, ch.layout_out(), v.out_party_order.labels());
}

inline ComplexMatrix trusted_input_state(const PartyView& v, const std::optional<ComplexMatrix>& trusted_input) {
  const std::size_t d = v.trusted->d_in;
  if (!trusted_input) return basis_projector(d, 0);
  ComplexMatrix t = *trusted_input;
  if (t.cols() == 1) t = projector(t.col(0));
  require(std::size_t(t.rows()) == d && is_density(t, 1e-9), "trusted input is not a density matrix of the right dimension");
  return t;
}

inline std::size_t uniform_or_throw(const std::vector<Party>& ps, bool input) {
  require(!ps.empty(), "channel has no untrusted parties");
  const std::size_t d = input ? ps[0].d_in : ps[0].d_out;
  for (const auto& p : ps) require((input ? p.d_in : p.d_out) == d, "untrusted parties have different dimensions");
  return d;
}

}  // namespace detail

// p(a|x) = tr[(x)|a_k><a_k| Lambda((x)|x_k><x_k|)]. A trusted party, if
// present, receives trusted_input (default |0>) and its output is traced.
inline Correlation correlations_from_channel(const Channel& ch, const Bases& in_bases = {}, const Bases& out_bases = {},
                                             const std::optional<ComplexMatrix>& trusted_input = std::nullopt) {
  const auto v = detail::party_view(ch);
  const std::size_t n = v.untrusted.size();
  const std::size_t m = detail::uniform_or_throw(v.untrusted, true);
  const std::size_t d = detail::uniform_or_throw(v.untrusted, false);
  std::vector<ComplexMatrix> bin, bout;
  for (std::size_t k = 0; k < n; ++k) {
    bin.push_back(detail::basis_for(in_bases, k, m));
    bout.push_back(detail::basis_for(out_bases, k, d));
  }
  const ComplexMatrix w = kron(bout);
  Correlation c(n, m, d);
  const auto xdims = uniform_dims(n, m);
  for (std::size_t x = 0; x < c.n_inputs(); ++x) {
    const auto xd = digits_of(x, xdims);
    std::vector<ComplexMatrix> f;
    for (std::size_t k = 0; k < n; ++k) f.push_back(projector(bin[k].col(Eigen::Index(xd[k]))));
    if (v.trusted) f.push_back(detail::trusted_input_state(v, trusted_input));
    ComplexMatrix out = detail::run_party_order(ch, v, kron(f));
    if (v.trusted) {
      std::vector<bool> mask(n + 1, false);
      mask[n] = true;
      out = partial_trace(out, v.out_party_order.dims(), mask);
    }
    ComplexMatrix rot = w.adjoint() * out * w;
    for (std::size_t a = 0; a < c.n_outcomes(); ++a) c.at(a, x) = rot(Eigen::Index(a), Eigen::Index(a)).real();
  }
  return c;
}

inline Assemblage assemblage_from_channel(const Channel& ch, const Bases& in_bases = {}, const Bases& out_bases = {},
                                          const std::optional<ComplexMatrix>& trusted_input = std::nullopt) {
  const auto v = detail::party_view(ch);
  require(v.trusted.has_value(), "assemblage extraction needs a trusted party");
  const std::size_t n = v.untrusted.size();
  const std::size_t m = detail::uniform_or_throw(v.untrusted, true);
  const std::size_t d = detail::uniform_or_throw(v.untrusted, false);
  const std::size_t db = v.trusted->d_out;
  std::vector<ComplexMatrix> bin, bout;
  for (std::size_t k = 0; k < n; ++k) {
    bin.push_back(detail::basis_for(in_bases, k, m));
    bout.push_back(detail::basis_for(out_bases, k, d));
  }
  const ComplexMatrix w = kron(kron(bout), identity(db));
  const ComplexMatrix tin = detail::trusted_input_state(v, trusted_input);
  Assemblage as(n, m, d, db);
  const auto xdims = uniform_dims(n, m);
  const auto b = Eigen::Index(db);
  for (std::size_t x = 0; x < as.n_inputs(); ++x) {
    const auto xd = digits_of(x, xdims);
    std::vector<ComplexMatrix> f;
    for (std::size_t k = 0; k < n; ++k) f.push_back(projector(bin[k].col(Eigen::Index(xd[k]))));
    f.push_back(tin);
    ComplexMatrix rot = w.adjoint() * detail::run_party_order(ch, v, kron(f)) * w;
    for (std::size_t a = 0; a < as.n_outcomes(); ++a) as.at(a, x) = rot.block(Eigen::Index(a) * b, Eigen::Index(a) * b, b, b);
  }
  return as;
}

// Preparations: per party, one density matrix per input on in_k (x) aux_k.
// POVMs: per party, one element per outcome on out_k (x) aux_k.
using Preparations = std::vector<std::vector<ComplexMatrix>>;
using Povms = std::vector<std::vector<ComplexMatrix>>;

namespace detail {

struct GeneralSetup {
  std::size_t n = 0, m = 0, d = 0;
  std::vector<std::size_t> aux;
};

inline GeneralSetup check_general(const PartyView& v, const Preparations& preps, const Povms& povms) {
  GeneralSetup s;
  s.n = v.untrusted.size();
  require(preps.size() == s.n && povms.size() == s.n, "one preparation set and one POVM per untrusted party required");
  s.m = preps[0].size();
  s.d = povms[0].size();
  require(s.m >= 1 && s.d >= 1, "empty preparation or POVM set");
  for (std::size_t k = 0; k < s.n; ++k) {
    require(preps[k].size() == s.m && povms[k].size() == s.d, "parties must share input and outcome counts");
    const std::size_t din = v.untrusted[k].d_in, dout = v.untrusted[k].d_out;
    require(preps[k][0].rows() % Eigen::Index(din) == 0, "preparation dimension mismatch");
    const std::size_t aux = std::size_t(preps[k][0].rows()) / din;
    s.aux.push_back(aux);
    for (const auto& r : preps[k])
      require(std::size_t(r.rows()) == din * aux && is_density(r, 1e-9), "preparation is not a density matrix on in (x) aux");
    ComplexMatrix total = ComplexMatrix::Zero(Eigen::Index(dout * aux), Eigen::Index(dout * aux));
    for (const auto& e : povms[k]) {
      require(std::size_t(e.rows()) == dout * aux && e.rows() == e.cols(), "POVM element dimension mismatch");
      require(is_psd(e, 1e-9), "POVM element is not positive semidefinite");
      total += e;
    }
    require(max_abs(total - identity(dout * aux)) <= 1e-9, "POVM is incomplete");
  }
  return s;
}

// Runs the channel with per-party inputs on in_k (x) aux_k (plus optional
// trusted input on B_in (x) B_aux) and returns the output on
// out_1 aux_1 ... out_N aux_N [B_out B_aux].
inline ComplexMatrix run_with_aux(const Channel& ch, const PartyView& v, const std::vector<ComplexMatrix>& inputs,
                                  const std::vector<std::size_t>& in_dims, const std::vector<std::size_t>& aux_dims) {
  const std::size_t P = inputs.size();
  // factors: in_1 aux_1 ... in_P aux_P ; reorder to (layout_in order) ++ aux_1..aux_P
  std::vector<std::size_t> dims;
  for (std::size_t k = 0; k < P; ++k) {
    dims.push_back(in_dims[k]);
    dims.push_back(aux_dims[k]);
  }
  std::vector<std::size_t> order;
  for (const auto& s : ch.layout_in().subsystems()) {
    std::size_t k = 0;
    while (v.parties[k].in_label != s.label) ++k;
    order.push_back(2 * k);
  }
  for (std::size_t k = 0; k < P; ++k) order.push_back(2 * k + 1);
  const ComplexMatrix rho = permute_subsystems(kron(inputs), dims, order);
  const std::size_t d_aux = product(aux_dims);
  const ComplexMatrix out = apply_extended(ch, rho, d_aux);
  // out factors: layout_out order ++ aux_1..aux_P ; reorder to out_1 aux_1 ...
  std::vector<std::size_t> odims;
  for (const auto& s : ch.layout_out().subsystems()) odims.push_back(s.dim);
  const std::size_t n_out = odims.size();
  for (auto a : aux_dims) odims.push_back(a);
  std::vector<std::size_t> oorder;
  for (std::size_t k = 0; k < P; ++k) {
    oorder.push_back(ch.layout_out().index_of(v.parties[k].out_label));
    oorder.push_back(n_out + k);
  }
  return permute_subsystems(out, odims, oorder);
}

}  // namespace detail

inline Correlation correlations_general(const Channel& ch, const Preparations& preps, const Povms& povms) {
  const auto v = detail::party_view(ch);
  const auto s = detail::check_general(v, preps, povms);
  Correlation c(s.n, s.m, s.d);
  std::vector<std::size_t> in_dims, aux_dims, out_dims;
  for (std::size_t k = 0; k < s.n; ++k) {
    in_dims.push_back(v.untrusted[k].d_in);
    aux_dims.push_back(s.aux[k]);
    out_dims.push_back(v.untrusted[k].d_out * s.aux[k]);
  }
  if (v.trusted) {
    in_dims.push_back(v.trusted->d_in);
    aux_dims.push_back(1);
    out_dims.push_back(v.trusted->d_out);
  }
  const auto xdims = uniform_dims(s.n, s.m);
  const auto adims = uniform_dims(s.n, s.d);
  for (std::size_t x = 0; x < c.n_inputs(); ++x) {
    const auto xd = digits_of(x, xdims);
    std::vector<ComplexMatrix> f;
    for (std::size_t k = 0; k < s.n; ++k) f.push_back(preps[k][xd[k]]);
    if (v.trusted) f.push_back(basis_projector(v.trusted->d_in, 0));
    ComplexMatrix out = detail::run_with_aux(ch, v, f, in_dims, aux_dims);
    if (v.trusted) {
      std::vector<bool> mask(out_dims.size(), false);
      mask.back() = true;
      out = partial_trace(out, out_dims, mask);
    }
    for (std::size_t a = 0; a < c.n_outcomes(); ++a) {
      const auto ad = digits_of(a, adims);
      std::vector<ComplexMatrix> e;
      for (std::size_t k = 0; k < s.n; ++k) e.push_back(povms[k][ad[k]]);
      c.at(a, x) = (kron(e).transpose().cwiseProduct(out)).sum().real();
    }
  }
  return c;
}

// trusted_prep lives on B_in (x) B_aux; the elements act on B_out (x) B_aux.
inline Assemblage assemblage_general(const Channel& ch, const Preparations& preps, const Povms& povms,
                                     const ComplexMatrix& trusted_prep) {
  const auto v = detail::party_view(ch);
  require(v.trusted.has_value(), "assemblage extraction needs a trusted party");
  const auto s = detail::check_general(v, preps, povms);
  require(trusted_prep.rows() % Eigen::Index(v.trusted->d_in) == 0, "trusted preparation dimension mismatch");
  const std::size_t b_aux = std::size_t(trusted_prep.rows()) / v.trusted->d_in;
  require(is_density(trusted_prep, 1e-9), "trusted preparation is not a density matrix");
  const std::size_t db = v.trusted->d_out * b_aux;
  Assemblage as(s.n, s.m, s.d, db);
  std::vector<std::size_t> in_dims, aux_dims, out_dims;
  for (std::size_t k = 0; k < s.n; ++k) {
    in_dims.push_back(v.untrusted[k].d_in);
    aux_dims.push_back(s.aux[k]);
  }
  in_dims.push_back(v.trusted->d_in);
  aux_dims.push_back(b_aux);
  const auto xdims = uniform_dims(s.n, s.m);
  const auto adims = uniform_dims(s.n, s.d);
  const auto b = Eigen::Index(db);
  for (std::size_t x = 0; x < as.n_inputs(); ++x) {
    const auto xd = digits_of(x, xdims);
    std::vector<ComplexMatrix> f;
    for (std::size_t k = 0; k < s.n; ++k) f.push_back(preps[k][xd[k]]);
    f.push_back(trusted_prep);
    const ComplexMatrix out = detail::run_with_aux(ch, v, f, in_dims, aux_dims);
    const Eigen::Index du = out.rows() / b;
    for (std::size_t a = 0; a < as.n_outcomes(); ++a) {
      const auto ad = digits_of(a, adims);
      std::vector<ComplexMatrix> e;
      for (std::size_t k = 0; k < s.n; ++k) e.push_back(povms[k][ad[k]]);
      const ComplexMatrix eu = kron(e);
      ComplexMatrix acc = ComplexMatrix::Zero(b, b);
      for (Eigen::Index i = 0; i < du; ++i)
        for (Eigen::Index j = 0; j < du; ++j) {
          const Complex w = eu(j, i);
          if (w != Complex(0)) acc += w * out.block(i * b, j * b, b, b);
        }
      as.at(a, x) = acc;
    }
  }
  return as;
}

// M_a = Lambda^dag((x) |a_k><a_k|), on the inputs in party order.
inline DistributedMeasurement distributed_measurement_from_channel(const Channel& ch, const Bases& out_bases = {}) {
  const auto v = detail::party_view(ch);
  require(!v.trusted.has_value(), "distributed measurement extraction expects no trusted party");
  const std::size_t n = v.untrusted.size();
  const std::size_t d = detail::uniform_or_throw(v.untrusted, false);
  DistributedMeasurement dm;
  dm.d = d;
  for (const auto& p : v.untrusted) dm.input_dims.push_back(p.d_in);
  std::vector<ComplexMatrix> bout;
  for (std::size_t k = 0; k < n; ++k) bout.push_back(detail::basis_for(out_bases, k, d));
  const DualMap dual(ch);
  const auto adims = uniform_dims(n, d);
  for (std::size_t a = 0; a < dm.n_outcomes(); ++a) {
    const auto ad = digits_of(a, adims);
    std::vector<ComplexMatrix> f;
    for (std::size_t k = 0; k < n; ++k) f.push_back(projector(bout[k].col(Eigen::Index(ad[k]))));
    const ComplexMatrix e = permute_subsystems(kron(f), v.out_party_order, ch.layout_out().labels());
    dm.elements.push_back(permute_subsystems(dual(e), ch.layout_in(), v.in_party_order.labels()));
  }
  return dm;
}

inline Teleportage teleportage_from_channel(const Channel& ch, const Bases& out_bases = {},
                                            const std::optional<ComplexMatrix>& trusted_input = std::nullopt) {
  const auto v = detail::party_view(ch);
  require(v.trusted.has_value(), "teleportage extraction needs a trusted party");
  const std::size_t n = v.untrusted.size();
  const std::size_t d = detail::uniform_or_throw(v.untrusted, false);
  Teleportage t;
  t.d = d;
  t.d_B = v.trusted->d_out;
  for (const auto& p : v.untrusted) t.input_dims.push_back(p.d_in);
  std::vector<ComplexMatrix> bout;
  for (std::size_t k = 0; k < n; ++k) bout.push_back(detail::basis_for(out_bases, k, d));
  const ComplexMatrix w = kron(kron(bout), identity(t.d_B));
  const ComplexMatrix tin = detail::trusted_input_state(v, trusted_input);
  const std::size_t dk = t.dim_K();
  const auto b = Eigen::Index(t.d_B);
  t.elements.assign(t.n_outcomes(), ComplexMatrix::Zero(Eigen::Index(dk) * b, Eigen::Index(dk) * b));
  for (std::size_t i = 0; i < dk; ++i)
    for (std::size_t j = 0; j < dk; ++j) {
      ComplexMatrix rot = w.adjoint() * detail::run_party_order(ch, v, kron(matrix_unit(dk, i, j), tin)) * w;
      for (std::size_t a = 0; a < t.n_outcomes(); ++a)
        t.elements[a].block(Eigen::Index(i) * b, Eigen::Index(j) * b, b, b) =
            rot.block(Eigen::Index(a) * b, Eigen::Index(a) * b, b, b);
    }
  return t;
}

// ---------------------------------------------------------------------------
// Helpers on tables

// Relabels each party's outcomes through `map` (old outcome -> new outcome).
inline Correlation coarse_grain_outputs(const Correlation& c, const std::vector<std::size_t>& map, std::size_t new_d) {
  require(map.size() == c.d, "coarse_grain_outputs: map must cover every outcome");
  for (auto v : map) require(v < new_d, "coarse_grain_outputs: target outcome out of range");
  Correlation out(c.n_parties, c.m, new_d);
  const auto adims = uniform_dims(c.n_parties, c.d);
  const auto ndims = uniform_dims(c.n_parties, new_d);
  for (std::size_t x = 0; x < c.n_inputs(); ++x)
    for (std::size_t a = 0; a < c.n_outcomes(); ++a) {
      auto ad = digits_of(a, adims);
      for (auto& v : ad) v = map[v];
      out.at(index_of_digits(ad, ndims), x) += c.at(a, x);
    }
  return out;
}

inline Correlation trace_assemblage(const Assemblage& as) {
  Correlation c(as.n_untrusted, as.m, as.d);
  for (std::size_t x = 0; x < as.n_inputs(); ++x)
    for (std::size_t a = 0; a < as.n_outcomes(); ++a) c.at(a, x) = as.at(a, x).trace().real();
  return c;
}

// Assemblage with trivial trusted system carrying a correlation.
inline Assemblage assemblage_from_correlation(const Correlation& c) {
  Assemblage as(c.n_parties, c.m, c.d, 1);
  for (std::size_t i = 0; i < c.table.size(); ++i) as.elements[i](0, 0) = c.table[i];
  return as;
}

// Correlations when the trusted party measures povms[y] on input y; it
// becomes the last party of the returned table.
inline Correlation measure_trusted(const Assemblage& as, const std::vector<std::vector<ComplexMatrix>>& povms) {
  require(povms.size() == as.m, "measure_trusted: need one POVM per input");
  for (const auto& p : povms) require(p.size() == as.d, "measure_trusted: POVM outcome count must equal d");
  Correlation c(as.n_untrusted + 1, as.m, as.d);
  for (std::size_t x = 0; x < as.n_inputs(); ++x)
    for (std::size_t y = 0; y < as.m; ++y)
      for (std::size_t a = 0; a < as.n_outcomes(); ++a)
        for (std::size_t b = 0; b < as.d; ++b)
          c.at(a * as.d + b, x * as.m + y) = (povms[y][b] * as.at(a, x)).trace().real();
  return c;
}

inline double chsh_value(const Correlation& c) {
  require(c.n_parties == 2 && c.m == 2 && c.d == 2, "CHSH needs two parties with two inputs and two outcomes");
  double s = 0;
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y) {
      double e = 0;
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) e += ((a ^ b) ? -1.0 : 1.0) * c.p({a, b}, {x, y});
      s += ((x & y) ? -1.0 : 1.0) * e;
    }
  return s;
}

// Largest |CHSH| over the equivalent forms obtained by relabelling one
// party's inputs or outcomes.
inline double chsh_best(const Correlation& c) {
  require(c.n_parties == 2 && c.m == 2 && c.d == 2, "CHSH needs two parties with two inputs and two outcomes");
  double best = 0;
  for (std::size_t s = 0; s < 4; ++s) {
    const std::size_t fx = s & 1, fy = (s >> 1) & 1;
    double v = 0;
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t y = 0; y < 2; ++y) {
        double e = 0;
        for (std::size_t a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < 2; ++b) e += ((a ^ b) ? -1.0 : 1.0) * c.p({a, b}, {x, y});
        v += (((x ^ fx) & (y ^ fy)) ? -1.0 : 1.0) * e;
      }
    best = std::max(best, std::abs(v));
  }
  return best;
}

}  // namespace qchan
