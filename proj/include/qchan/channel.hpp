#pragma once

#include <functional>
#include <optional>

#include "qchan/tensor.hpp"

namespace qchan {

// One party of a channel: an input/output pair. Untrusted parties are paired
// in order of appearance; the trusted party (if any) comes last.
struct Party {
  std::string in_label;
  std::string out_label;
  std::size_t d_in = 1;
  std::size_t d_out = 1;
  bool trusted = false;
};

// CPTP map stored as its normalized Choi state on layout_in (x) layout_out:
//   choi = sum_ij |i><j| (x) Lambda(|i><j|) / d_in
class Channel {
 public:
  Channel() = default;

  Channel(SystemLayout in, SystemLayout out, ComplexMatrix choi, double tol = kDefaultTol)
      : in_(std::move(in)), out_(std::move(out)), choi_(std::move(choi)) {
    in_.concat(out_);  // labels must be distinct across both sides
    for (const auto& s : in_.subsystems())
      require(s.role != Role::UntrustedOut && s.role != Role::TrustedOut, "output role on input subsystem '" + s.label + "'");
    for (const auto& s : out_.subsystems())
      require(s.role != Role::UntrustedIn && s.role != Role::TrustedIn, "input role on output subsystem '" + s.label + "'");
    const std::size_t n = d_in() * d_out();
    require(std::size_t(choi_.rows()) == n && std::size_t(choi_.cols()) == n, "choi dimension does not match layouts");
    require(choi_.allFinite(), "choi has non-finite entries");
    require(is_hermitian(choi_, tol), "choi is not Hermitian");
    choi_ = 0.5 * (choi_ + choi_.adjoint()).eval();
    require(min_eigenvalue(choi_) >= -tol, "choi is not positive semidefinite (channel not completely positive)");
    require(tp_residual() < tol, "partial trace of choi over outputs is not 1/d_in (channel not trace preserving)");
  }

  const SystemLayout& layout_in() const { return in_; }
  const SystemLayout& layout_out() const { return out_; }
  const ComplexMatrix& choi() const { return choi_; }
  std::size_t d_in() const { return in_.total_dim(); }
  std::size_t d_out() const { return out_.total_dim(); }
  SystemLayout choi_layout() const { return in_.concat(out_); }

  // Omega_ij, the (i,j) block of the Choi state over the input index.
  auto block(std::size_t i, std::size_t j) const {
    const auto o = Eigen::Index(d_out());
    return choi_.block(Eigen::Index(i) * o, Eigen::Index(j) * o, o, o);
  }

  double tp_residual() const {
    ComplexMatrix red = ComplexMatrix::Zero(Eigen::Index(d_in()), Eigen::Index(d_in()));
    for (std::size_t i = 0; i < d_in(); ++i)
      for (std::size_t j = 0; j < d_in(); ++j) red(Eigen::Index(i), Eigen::Index(j)) = block(i, j).trace();
    return frobenius(red - identity(d_in()) / double(d_in()));
  }

  std::vector<Party> parties() const {
    std::vector<const Subsystem*> ui, uo, ti, to;
    for (const auto& s : in_.subsystems()) {
      if (s.role == Role::UntrustedIn) ui.push_back(&s);
      else if (s.role == Role::TrustedIn) ti.push_back(&s);
      else throw ValidationError("input subsystem '" + s.label + "' has no input role");
    }
    for (const auto& s : out_.subsystems()) {
      if (s.role == Role::UntrustedOut) uo.push_back(&s);
      else if (s.role == Role::TrustedOut) to.push_back(&s);
      else throw ValidationError("output subsystem '" + s.label + "' has no output role");
    }
    require(ui.size() == uo.size(), "untrusted inputs and outputs do not pair up");
    require(ti.size() == to.size() && ti.size() <= 1, "at most one trusted input/output pair is supported");
    std::vector<Party> out;
    for (std::size_t k = 0; k < ui.size(); ++k) out.push_back({ui[k]->label, uo[k]->label, ui[k]->dim, uo[k]->dim, false});
    if (!ti.empty()) out.push_back({ti[0]->label, to[0]->label, ti[0]->dim, to[0]->dim, true});
    return out;
  }

  std::size_t n_untrusted() const {
    std::size_t n = 0;
    for (const auto& p : parties()) n += p.trusted ? 0 : 1;
    return n;
  }

  bool has_trusted() const {
    const auto ps = parties();
    return !ps.empty() && ps.back().trusted;
  }

 private:
  SystemLayout in_, out_;
  ComplexMatrix choi_;
};

// Lambda(rho) = d_in * sum_ij rho_ij Omega_ij
inline ComplexMatrix apply(const Channel& ch, const ComplexMatrix& rho) {
  require(std::size_t(rho.rows()) == ch.d_in() && std::size_t(rho.cols()) == ch.d_in(), "apply: input dimension mismatch");
  const auto o = Eigen::Index(ch.d_out());
  ComplexMatrix out = ComplexMatrix::Zero(o, o);
  for (std::size_t j = 0; j < ch.d_in(); ++j)
    for (std::size_t i = 0; i < ch.d_in(); ++i) {
      const Complex r = rho(Eigen::Index(i), Eigen::Index(j));
      if (r != Complex(0)) out += r * ch.block(i, j);
    }
  return double(ch.d_in()) * out;
}

// (Lambda (x) id_aux)(rho) for rho on in (x) aux; result on out (x) aux.
inline ComplexMatrix apply_extended(const Channel& ch, const ComplexMatrix& rho, std::size_t d_aux) {
  const std::size_t di = ch.d_in(), dout = ch.d_out();
  require(std::size_t(rho.rows()) == di * d_aux && rho.rows() == rho.cols(), "apply_extended: dimension mismatch");
  const auto o = Eigen::Index(dout);
  const auto x = Eigen::Index(d_aux);
  ComplexMatrix out = ComplexMatrix::Zero(o * x, o * x);
  for (std::size_t i = 0; i < di; ++i)
    for (std::size_t j = 0; j < di; ++j) {
      auto aux = rho.block(Eigen::Index(i) * x, Eigen::Index(j) * x, x, x);
      if (max_abs(aux) == 0.0) continue;
      out += kron(double(di) * ComplexMatrix(ch.block(i, j)), aux);
    }
  return out;
}

struct KrausSet {
  std::vector<ComplexMatrix> operators;  // each d_out x d_in

  ComplexMatrix apply(const ComplexMatrix& rho) const {
    require(!operators.empty(), "empty Kraus set");
    ComplexMatrix out = ComplexMatrix::Zero(operators[0].rows(), operators[0].rows());
    for (const auto& k : operators) out += k * rho * k.adjoint();
    return out;
  }

  double completeness_residual() const {
    require(!operators.empty(), "empty Kraus set");
    ComplexMatrix s = ComplexMatrix::Zero(operators[0].cols(), operators[0].cols());
    for (const auto& k : operators) s += k.adjoint() * k;
    return max_abs(s - identity(std::size_t(s.rows())));
  }
};

inline KrausSet kraus_from_choi(const Channel& ch, double cutoff = 1e-10) {
  const std::size_t di = ch.d_in(), dout = ch.d_out();
  const auto eig = eig_hermitian(ch.choi() * double(di));
  KrausSet ks;
  for (std::size_t k = 0; k < eig.values.size(); ++k) {
    if (eig.values[k] <= cutoff) break;
    ComplexMatrix op{Eigen::Index(dout), Eigen::Index(di)};
    const double s = std::sqrt(eig.values[k]);
    for (std::size_t i = 0; i < di; ++i)
      for (std::size_t o = 0; o < dout; ++o)
        op(Eigen::Index(o), Eigen::Index(i)) = s * eig.vectors(Eigen::Index(i * dout + o), Eigen::Index(k));
    ks.operators.push_back(std::move(op));
  }
  return ks;
}

inline ComplexMatrix choi_matrix_from_kraus(const std::vector<ComplexMatrix>& ops, std::size_t di, std::size_t dout) {
  ComplexMatrix choi = ComplexMatrix::Zero(Eigen::Index(di * dout), Eigen::Index(di * dout));
  ComplexVector v{Eigen::Index(di * dout)};
  for (const auto& k : ops) {
    require(std::size_t(k.rows()) == dout && std::size_t(k.cols()) == di, "Kraus operator has wrong shape");
    for (std::size_t i = 0; i < di; ++i)
      for (std::size_t o = 0; o < dout; ++o) v(Eigen::Index(i * dout + o)) = k(Eigen::Index(o), Eigen::Index(i));
    choi.selfadjointView<Eigen::Lower>().rankUpdate(v);
  }
  ComplexMatrix full = choi.selfadjointView<Eigen::Lower>();
  return full / double(di);
}

inline Channel choi_from_kraus(const KrausSet& ks, SystemLayout in, SystemLayout out, double tol = kDefaultTol) {
  const std::size_t di = in.total_dim(), dout = out.total_dim();
  require(ks.completeness_residual() <= tol, "Kraus operators are not complete");
  ComplexMatrix choi = choi_matrix_from_kraus(ks.operators, di, dout);
  return Channel(std::move(in), std::move(out), std::move(choi), tol);
}

// Builds a channel from its action on matrix units |i><j|.
inline Channel channel_from_action(SystemLayout in, SystemLayout out,
                                   const std::function<ComplexMatrix(const ComplexMatrix&)>& f,
                                   double tol = kDefaultTol) {
  const std::size_t di = in.total_dim(), dout = out.total_dim();
  const auto o = Eigen::Index(dout);
  ComplexMatrix choi = ComplexMatrix::Zero(Eigen::Index(di) * o, Eigen::Index(di) * o);
  for (std::size_t i = 0; i < di; ++i)
    for (std::size_t j = 0; j < di; ++j) {
      ComplexMatrix img = f(matrix_unit(di, i, j));
      require(img.rows() == o && img.cols() == o, "channel_from_action: image has wrong dimension");
      choi.block(Eigen::Index(i) * o, Eigen::Index(j) * o, o, o) = img / double(di);
    }
  return Channel(std::move(in), std::move(out), std::move(choi), tol);
}

inline Channel unitary_channel(SystemLayout in, SystemLayout out, const ComplexMatrix& u, double tol = kDefaultTol) {
  require(is_unitary(u, tol), "unitary_channel: matrix is not unitary");
  return choi_from_kraus(KrausSet{{u}}, std::move(in), std::move(out), tol);
}

inline Channel identity_channel(SystemLayout in, SystemLayout out) {
  const std::size_t d = in.total_dim();
  require(d == out.total_dim(), "identity_channel: dimension mismatch");
  return unitary_channel(std::move(in), std::move(out), identity(d));
}

// Heisenberg-picture adjoint of a channel.
class DualMap {
 public:
  explicit DualMap(Channel ch) : ch_(std::move(ch)) {}

  // tr[E Lambda(rho)] = tr[Lambda^dag(E) rho]; Lambda^dag(E)_ji = d_in tr[E Omega_ij]
  ComplexMatrix operator()(const ComplexMatrix& e) const {
    const std::size_t di = ch_.d_in();
    require(std::size_t(e.rows()) == ch_.d_out() && e.rows() == e.cols(), "dual: dimension mismatch");
    ComplexMatrix out{Eigen::Index(di), Eigen::Index(di)};
    for (std::size_t i = 0; i < di; ++i)
      for (std::size_t j = 0; j < di; ++j)
        out(Eigen::Index(j), Eigen::Index(i)) = double(di) * (e.cwiseProduct(ch_.block(i, j).transpose())).sum();
    return out;
  }

  const Channel& channel() const { return ch_; }

 private:
  Channel ch_;
};

inline DualMap dual_channel(const Channel& ch) { return DualMap(ch); }

inline Channel compose_parallel(const Channel& a, const Channel& b, double tol = kDefaultTol) {
  SystemLayout in = a.layout_in().concat(b.layout_in());
  SystemLayout out = a.layout_out().concat(b.layout_out());
  // kron orders factors as in_a out_a in_b out_b
  ComplexMatrix joint = kron(a.choi(), b.choi());
  const std::vector<std::size_t> dims{a.d_in(), a.d_out(), b.d_in(), b.d_out()};
  ComplexMatrix choi = permute_subsystems(joint, dims, {0, 2, 1, 3});
  return Channel(std::move(in), std::move(out), std::move(choi), tol);
}

// b after a.
inline Channel compose_serial(const Channel& a, const Channel& b, double tol = kDefaultTol) {
  require(a.d_out() == b.d_in() && a.layout_out().dims() == b.layout_in().dims(),
          "compose_serial: output layout of the first channel does not match input of the second");
  return channel_from_action(
      a.layout_in(), b.layout_out(), [&](const ComplexMatrix& x) { return qchan::apply(b, qchan::apply(a, x)); }, tol);
}

// ---------------------------------------------------------------------------
// Circuit form

struct Gate {
  ComplexMatrix unitary;
  std::vector<std::string> acts_on;
};

// An output subsystem formed from one or more registers (merged in order).
struct OutputPort {
  std::string label;
  Role role = Role::UntrustedOut;
  std::vector<std::string> registers;
};

// Unitary dilation: registers with input roles are the channel inputs, the
// rest are ancillas prepared in ancilla_prep (vector or density matrix over
// the ancilla registers in layout order).
struct CircuitChannel {
  SystemLayout registers;
  ComplexMatrix ancilla_prep = ComplexMatrix::Ones(1, 1);
  std::vector<Gate> gates;
  std::vector<std::string> discard;
  std::vector<OutputPort> keep;

  SystemLayout input_layout() const {
    std::vector<Subsystem> subs;
    for (const auto& s : registers.subsystems())
      if (is_input_role(s.role)) subs.push_back(s);
    return SystemLayout(std::move(subs));
  }

  SystemLayout ancilla_layout() const {
    std::vector<Subsystem> subs;
    for (const auto& s : registers.subsystems())
      if (!is_input_role(s.role)) subs.push_back(s);
    return SystemLayout(std::move(subs));
  }

  SystemLayout output_layout() const {
    std::vector<Subsystem> subs;
    for (const auto& p : keep) {
      std::size_t d = 1;
      for (const auto& r : p.registers) d *= registers.dim_of(r);
      subs.push_back({p.label, d, p.role});
    }
    return SystemLayout(std::move(subs));
  }

  void validate(double tol = kDefaultTol) const {
    const std::size_t da = ancilla_layout().total_dim();
    const bool vec = ancilla_prep.cols() == 1;
    require(std::size_t(ancilla_prep.rows()) == da && (vec || std::size_t(ancilla_prep.cols()) == da),
            "ancilla preparation does not match ancilla registers");
    if (vec)
      require(std::abs(ancilla_prep.norm() - 1.0) <= tol, "ancilla state vector is not normalized");
    else
      require(is_density(ancilla_prep, tol), "ancilla preparation is not a density matrix");
    for (std::size_t g = 0; g < gates.size(); ++g) {
      const auto& gate = gates[g];
      std::size_t d = 1;
      std::unordered_set<std::string> seen;
      for (const auto& l : gate.acts_on) {
        require(seen.insert(l).second, "gate " + std::to_string(g) + " repeats register '" + l + "'");
        d *= registers.dim_of(l);
      }
      require(std::size_t(gate.unitary.rows()) == d && std::size_t(gate.unitary.cols()) == d,
              "gate " + std::to_string(g) + " dimension does not match its registers");
      require(is_unitary(gate.unitary, tol), "gate " + std::to_string(g) + " is not unitary");
    }
    std::unordered_set<std::string> used;
    for (const auto& l : discard) {
      registers.index_of(l);
      require(used.insert(l).second, "register '" + l + "' listed twice in keep/discard");
    }
    for (const auto& p : keep) {
      require(is_output_role(p.role), "output port '" + p.label + "' needs an output role");
      require(!p.registers.empty(), "output port '" + p.label + "' has no registers");
      for (const auto& l : p.registers) {
        registers.index_of(l);
        require(used.insert(l).second, "register '" + l + "' listed twice in keep/discard");
      }
    }
    require(used.size() == registers.size(), "keep and discard do not cover all registers");
    input_layout().concat(output_layout());
  }
};

// Kraus operators of a compiled circuit, one per (ancilla component,
// discarded basis state).
inline KrausSet circuit_kraus(const CircuitChannel& c, double tol = kDefaultTol) {
  c.validate(tol);
  const auto dims = c.registers.dims();
  const std::size_t total = product(dims);
  const SystemLayout in = c.input_layout();
  const std::size_t di = in.total_dim();

  std::vector<std::size_t> in_pos, anc_pos;
  for (std::size_t k = 0; k < c.registers.size(); ++k)
    (is_input_role(c.registers[k].role) ? in_pos : anc_pos).push_back(k);
  std::vector<std::size_t> in_dims, anc_dims;
  for (auto k : in_pos) in_dims.push_back(dims[k]);
  for (auto k : anc_pos) anc_dims.push_back(dims[k]);

  std::vector<ComplexVector> components;
  if (c.ancilla_prep.cols() == 1) {
    components.push_back(c.ancilla_prep.col(0));
  } else {
    const auto eig = eig_hermitian(c.ancilla_prep, tol);
    for (std::size_t k = 0; k < eig.values.size(); ++k)
      if (eig.values[k] > 1e-14) components.push_back(std::sqrt(eig.values[k]) * eig.vectors.col(Eigen::Index(k)));
  }

  std::vector<std::size_t> keep_order, disc_order;
  for (const auto& p : c.keep)
    for (const auto& r : p.registers) keep_order.push_back(c.registers.index_of(r));
  for (const auto& r : c.discard) disc_order.push_back(c.registers.index_of(r));
  std::vector<std::size_t> order = keep_order;
  order.insert(order.end(), disc_order.begin(), disc_order.end());
  std::size_t dk = 1, dd = 1;
  for (auto k : keep_order) dk *= dims[k];
  for (auto k : disc_order) dd *= dims[k];

  std::vector<std::vector<std::size_t>> gate_targets;
  for (const auto& g : c.gates) gate_targets.push_back(c.registers.indices_of(g.acts_on));

  KrausSet ks;
  std::vector<std::size_t> full(dims.size());
  for (const auto& comp : components) {
    ComplexMatrix v = ComplexMatrix::Zero(Eigen::Index(total), Eigen::Index(di));
    for (std::size_t i = 0; i < di; ++i) {
      const auto id = digits_of(i, in_dims);
      for (std::size_t k = 0; k < in_pos.size(); ++k) full[in_pos[k]] = id[k];
      for (std::size_t a = 0; a < std::size_t(comp.size()); ++a) {
        if (comp(Eigen::Index(a)) == Complex(0)) continue;
        const auto ad = digits_of(a, anc_dims);
        for (std::size_t k = 0; k < anc_pos.size(); ++k) full[anc_pos[k]] = ad[k];
        v(Eigen::Index(index_of_digits(full, dims)), Eigen::Index(i)) = comp(Eigen::Index(a));
      }
    }
    for (std::size_t g = 0; g < c.gates.size(); ++g) apply_local(v, dims, gate_targets[g], c.gates[g].unitary);
    ComplexMatrix w = permute_rows(v, dims, order);
    for (std::size_t t = 0; t < dd; ++t) {
      ComplexMatrix k{Eigen::Index(dk), Eigen::Index(di)};
      for (std::size_t o = 0; o < dk; ++o) k.row(Eigen::Index(o)) = w.row(Eigen::Index(o * dd + t));
      if (max_abs(k) > 1e-15) ks.operators.push_back(std::move(k));
    }
  }
  return ks;
}

inline Channel compile_circuit(const CircuitChannel& c, double tol = kDefaultTol) {
  const KrausSet ks = circuit_kraus(c, tol);
  return Channel(c.input_layout(), c.output_layout(),
                 choi_matrix_from_kraus(ks.operators, c.input_layout().total_dim(), c.output_layout().total_dim()), tol);
}

}  // namespace qchan
