#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace qchan {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kDefaultTol = 1e-9;
inline constexpr double kPi = 3.14159265358979323846;

// Raised whenever an input violates a documented invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

enum class Role { UntrustedIn, UntrustedOut, TrustedIn, TrustedOut, Ancilla };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::UntrustedIn: return "untrusted-in";
    case Role::UntrustedOut: return "untrusted-out";
    case Role::TrustedIn: return "trusted-in";
    case Role::TrustedOut: return "trusted-out";
    case Role::Ancilla: return "ancilla";
  }
  return "?";
}

inline Role role_from_name(const std::string& s) {
  if (s == "untrusted-in") return Role::UntrustedIn;
  if (s == "untrusted-out") return Role::UntrustedOut;
  if (s == "trusted-in") return Role::TrustedIn;
  if (s == "trusted-out") return Role::TrustedOut;
  if (s == "ancilla") return Role::Ancilla;
  throw ValidationError("unknown role '" + s + "'");
}

inline bool is_input_role(Role r) { return r == Role::UntrustedIn || r == Role::TrustedIn; }
inline bool is_output_role(Role r) { return r == Role::UntrustedOut || r == Role::TrustedOut; }
inline bool is_trusted_role(Role r) { return r == Role::TrustedIn || r == Role::TrustedOut; }

struct Subsystem {
  std::string label;
  std::size_t dim = 1;
  Role role = Role::Ancilla;
};

// Ordered tensor-product structure. The first subsystem is the most
// significant factor of the joint index.
class SystemLayout {
 public:
  SystemLayout() = default;

  explicit SystemLayout(std::vector<Subsystem> subs) : subs_(std::move(subs)) {
    std::unordered_set<std::string> seen;
    for (const auto& s : subs_) {
      require(!s.label.empty(), "subsystem label must be non-empty");
      require(s.dim >= 1, "subsystem '" + s.label + "' has zero dimension");
      require(seen.insert(s.label).second, "duplicate subsystem label '" + s.label + "'");
    }
  }

  std::size_t size() const { return subs_.size(); }
  bool empty() const { return subs_.empty(); }
  const Subsystem& operator[](std::size_t i) const { return subs_.at(i); }
  const std::vector<Subsystem>& subsystems() const { return subs_; }

  std::size_t total_dim() const {
    std::size_t d = 1;
    for (const auto& s : subs_) d *= s.dim;
    return d;
  }

  std::vector<std::size_t> dims() const {
    std::vector<std::size_t> out;
    out.reserve(subs_.size());
    for (const auto& s : subs_) out.push_back(s.dim);
    return out;
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    out.reserve(subs_.size());
    for (const auto& s : subs_) out.push_back(s.label);
    return out;
  }

  bool contains(const std::string& label) const {
    return std::any_of(subs_.begin(), subs_.end(), [&](const Subsystem& s) { return s.label == label; });
  }

  std::size_t index_of(const std::string& label) const {
    for (std::size_t i = 0; i < subs_.size(); ++i)
      if (subs_[i].label == label) return i;
    throw ValidationError("no subsystem labelled '" + label + "'");
  }

  std::size_t dim_of(const std::string& label) const { return subs_[index_of(label)].dim; }

  SystemLayout concat(const SystemLayout& other) const {
    auto all = subs_;
    all.insert(all.end(), other.subs_.begin(), other.subs_.end());
    return SystemLayout(std::move(all));
  }

  SystemLayout select(const std::vector<std::string>& labels) const {
    std::vector<Subsystem> out;
    for (const auto& l : labels) out.push_back(subs_[index_of(l)]);
    return SystemLayout(std::move(out));
  }

  SystemLayout without(const std::vector<std::string>& labels) const {
    std::vector<Subsystem> out;
    for (const auto& s : subs_)
      if (std::find(labels.begin(), labels.end(), s.label) == labels.end()) out.push_back(s);
    return SystemLayout(std::move(out));
  }

  std::vector<std::size_t> indices_of(const std::vector<std::string>& labels) const {
    std::vector<std::size_t> out;
    for (const auto& l : labels) out.push_back(index_of(l));
    return out;
  }

  bool operator==(const SystemLayout& o) const {
    if (subs_.size() != o.subs_.size()) return false;
    for (std::size_t i = 0; i < subs_.size(); ++i)
      if (subs_[i].label != o.subs_[i].label || subs_[i].dim != o.subs_[i].dim || subs_[i].role != o.subs_[i].role)
        return false;
    return true;
  }

 private:
  std::vector<Subsystem> subs_;
};

inline std::size_t product(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

// Mixed-radix digits of idx, most significant first.
inline std::vector<std::size_t> digits_of(std::size_t idx, const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> out(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    out[k] = idx % dims[k];
    idx /= dims[k];
  }
  return out;
}

inline std::size_t index_of_digits(const std::vector<std::size_t>& digits, const std::vector<std::size_t>& dims) {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) idx = idx * dims[k] + digits[k];
  return idx;
}

inline ComplexMatrix identity(std::size_t d) { return ComplexMatrix::Identity(Eigen::Index(d), Eigen::Index(d)); }

inline ComplexVector ket(std::size_t d, std::size_t i) {
  require(i < d, "basis index out of range");
  ComplexVector v = ComplexVector::Zero(Eigen::Index(d));
  v(Eigen::Index(i)) = 1.0;
  return v;
}

inline ComplexMatrix projector(const ComplexVector& v) { return v * v.adjoint(); }

inline ComplexMatrix basis_projector(std::size_t d, std::size_t i) { return projector(ket(d, i)); }

inline ComplexMatrix matrix_unit(std::size_t d, std::size_t i, std::size_t j) {
  ComplexMatrix m = ComplexMatrix::Zero(Eigen::Index(d), Eigen::Index(d));
  m(Eigen::Index(i), Eigen::Index(j)) = 1.0;
  return m;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline ComplexMatrix kron(const std::vector<ComplexMatrix>& factors) {
  ComplexMatrix out = ComplexMatrix::Ones(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return out;
}

inline double frobenius(const ComplexMatrix& m) { return m.norm(); }

inline double max_abs(const ComplexMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline bool is_hermitian(const ComplexMatrix& m, double tol = kDefaultTol) {
  if (m.rows() != m.cols()) return false;
  return max_abs(m - m.adjoint()) <= tol;
}

struct EigenDecomposition {
  std::vector<double> values;  // descending
  ComplexMatrix vectors;       // columns match values
};

inline EigenDecomposition eig_hermitian(const ComplexMatrix& m, double tol = kDefaultTol) {
  require(m.rows() == m.cols(), "eig_hermitian: matrix is not square");
  require(is_hermitian(m, tol * std::max(1.0, max_abs(m))), "eig_hermitian: matrix is not Hermitian");
  ComplexMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  require(es.info() == Eigen::Success, "eig_hermitian: eigensolver failed");
  const Eigen::Index n = h.rows();
  EigenDecomposition out;
  out.values.resize(std::size_t(n));
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[std::size_t(k)] = es.eigenvalues()(n - 1 - k);
    out.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
  }
  return out;
}

inline double min_eigenvalue(const ComplexMatrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline bool is_psd(const ComplexMatrix& m, double tol = kDefaultTol) {
  if (!is_hermitian(m, tol)) return false;
  return min_eigenvalue(m) >= -tol;
}

inline bool is_density(const ComplexMatrix& m, double tol = kDefaultTol) {
  return is_psd(m, tol) && std::abs(m.trace() - 1.0) <= tol;
}

inline bool is_unitary(const ComplexMatrix& u, double tol = kDefaultTol) {
  if (u.rows() != u.cols()) return false;
  return max_abs(u.adjoint() * u - identity(std::size_t(u.rows()))) <= tol;
}

// Applies f to the spectrum of a Hermitian matrix.
template <class F>
ComplexMatrix spectral_map(const ComplexMatrix& m, F f) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()));
  Eigen::VectorXd vals = es.eigenvalues();
  for (Eigen::Index i = 0; i < vals.size(); ++i) vals(i) = f(vals(i));
  return es.eigenvectors() * vals.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

inline ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
  return spectral_map(m, [](double v) { return v > 0 ? std::sqrt(v) : 0.0; });
}

// Inverse square root on the support; eigenvalues below cutoff map to 0.
inline ComplexMatrix pinv_sqrt(const ComplexMatrix& m, double cutoff = 1e-10) {
  return spectral_map(m, [cutoff](double v) { return v > cutoff ? 1.0 / std::sqrt(v) : 0.0; });
}

inline ComplexMatrix support_projector(const ComplexMatrix& m, double cutoff = 1e-10) {
  return spectral_map(m, [cutoff](double v) { return v > cutoff ? 1.0 : 0.0; });
}

inline ComplexMatrix psd_part(const ComplexMatrix& m) {
  return spectral_map(m, [](double v) { return v > 0 ? v : 0.0; });
}

inline double trace_norm(const ComplexMatrix& m) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues().sum();
}

inline double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) { return 0.5 * trace_norm(a - b); }

namespace detail {

struct Split {
  std::vector<std::size_t> keep_offset;   // offset of each kept multi-index in the full index
  std::vector<std::size_t> trace_offset;  // offset of each traced multi-index
};

inline Split split_offsets(const std::vector<std::size_t>& dims, const std::vector<bool>& traced) {
  const std::size_t n = dims.size();
  std::vector<std::size_t> stride(n, 1);
  for (std::size_t k = n; k-- > 1;) stride[k - 1] = stride[k] * dims[k];
  std::vector<std::size_t> kd, ks, td, ts;
  for (std::size_t k = 0; k < n; ++k) {
    if (traced[k]) {
      td.push_back(dims[k]);
      ts.push_back(stride[k]);
    } else {
      kd.push_back(dims[k]);
      ks.push_back(stride[k]);
    }
  }
  auto offsets = [](const std::vector<std::size_t>& d, const std::vector<std::size_t>& s) {
    std::vector<std::size_t> out(product(d));
    for (std::size_t i = 0; i < out.size(); ++i) {
      auto dig = digits_of(i, d);
      std::size_t off = 0;
      for (std::size_t k = 0; k < d.size(); ++k) off += dig[k] * s[k];
      out[i] = off;
    }
    return out;
  };
  return {offsets(kd, ks), offsets(td, ts)};
}

}  // namespace detail

inline ComplexMatrix partial_trace(const ComplexMatrix& m, const std::vector<std::size_t>& dims,
                                   const std::vector<bool>& traced) {
  require(dims.size() == traced.size(), "partial_trace: mask size mismatch");
  require(std::size_t(m.rows()) == product(dims) && m.rows() == m.cols(), "partial_trace: dimension mismatch");
  const auto sp = detail::split_offsets(dims, traced);
  const std::size_t dk = sp.keep_offset.size();
  ComplexMatrix out = ComplexMatrix::Zero(Eigen::Index(dk), Eigen::Index(dk));
  for (std::size_t c = 0; c < dk; ++c)
    for (std::size_t r = 0; r < dk; ++r) {
      Complex acc = 0;
      for (std::size_t t : sp.trace_offset)
        acc += m(Eigen::Index(sp.keep_offset[r] + t), Eigen::Index(sp.keep_offset[c] + t));
      out(Eigen::Index(r), Eigen::Index(c)) = acc;
    }
  return out;
}

inline ComplexMatrix partial_trace(const ComplexMatrix& m, const SystemLayout& layout,
                                   const std::vector<std::string>& traced_labels) {
  std::vector<bool> mask(layout.size(), false);
  for (const auto& l : traced_labels) mask[layout.index_of(l)] = true;
  return partial_trace(m, layout.dims(), mask);
}

// Row permutation taking a vector on factors `dims` to one whose factor k is
// old factor order[k].
inline std::vector<std::size_t> permutation_map(const std::vector<std::size_t>& dims,
                                                const std::vector<std::size_t>& order) {
  const std::size_t n = dims.size();
  require(order.size() == n, "permutation: wrong length");
  std::vector<bool> seen(n, false);
  for (auto o : order) {
    require(o < n && !seen[o], "permutation: not a permutation");
    seen[o] = true;
  }
  std::vector<std::size_t> new_dims(n);
  for (std::size_t k = 0; k < n; ++k) new_dims[k] = dims[order[k]];
  const std::size_t total = product(dims);
  std::vector<std::size_t> map(total);  // map[new_index] = old_index
  std::vector<std::size_t> old_digits(n);
  for (std::size_t i = 0; i < total; ++i) {
    auto nd = digits_of(i, new_dims);
    for (std::size_t k = 0; k < n; ++k) old_digits[order[k]] = nd[k];
    map[i] = index_of_digits(old_digits, dims);
  }
  return map;
}

inline ComplexMatrix permute_subsystems(const ComplexMatrix& m, const std::vector<std::size_t>& dims,
                                        const std::vector<std::size_t>& order) {
  require(std::size_t(m.rows()) == product(dims) && m.rows() == m.cols(), "permute_subsystems: dimension mismatch");
  const auto map = permutation_map(dims, order);
  const Eigen::Index n = m.rows();
  ComplexMatrix out(n, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) out(r, c) = m(Eigen::Index(map[std::size_t(r)]), Eigen::Index(map[std::size_t(c)]));
  return out;
}

inline ComplexMatrix permute_rows(const ComplexMatrix& m, const std::vector<std::size_t>& dims,
                                  const std::vector<std::size_t>& order) {
  require(std::size_t(m.rows()) == product(dims), "permute_rows: dimension mismatch");
  const auto map = permutation_map(dims, order);
  ComplexMatrix out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.row(r) = m.row(Eigen::Index(map[std::size_t(r)]));
  return out;
}

// Reorders the factors of m (on `layout`) into the label order `new_order`.
inline ComplexMatrix permute_subsystems(const ComplexMatrix& m, const SystemLayout& layout,
                                        const std::vector<std::string>& new_order) {
  return permute_subsystems(m, layout.dims(), layout.indices_of(new_order));
}

// Applies a gate acting on the factors `targets` (in that order) to every
// column of v in place.
inline void apply_local(ComplexMatrix& v, const std::vector<std::size_t>& dims, const std::vector<std::size_t>& targets,
                        const ComplexMatrix& u) {
  std::vector<bool> mask(dims.size(), false);
  std::vector<std::size_t> tdims;
  for (auto t : targets) {
    require(t < dims.size() && !mask[t], "apply_local: bad target list");
    mask[t] = true;
    tdims.push_back(dims[t]);
  }
  const std::size_t k = product(tdims);
  require(std::size_t(u.rows()) == k && std::size_t(u.cols()) == k, "apply_local: gate dimension mismatch");
  require(std::size_t(v.rows()) == product(dims), "apply_local: state dimension mismatch");

  const std::size_t n = dims.size();
  std::vector<std::size_t> stride(n, 1);
  for (std::size_t i = n; i-- > 1;) stride[i - 1] = stride[i] * dims[i];
  std::vector<std::size_t> target_off(k);
  for (std::size_t i = 0; i < k; ++i) {
    auto dig = digits_of(i, tdims);
    std::size_t off = 0;
    for (std::size_t j = 0; j < targets.size(); ++j) off += dig[j] * stride[targets[j]];
    target_off[i] = off;
  }
  // spectator offsets are the "kept" part when the targets are masked out
  const auto sp = detail::split_offsets(dims, mask);
  ComplexVector buf{Eigen::Index(k)}, res{Eigen::Index(k)};
  for (Eigen::Index col = 0; col < v.cols(); ++col)
    for (std::size_t base : sp.keep_offset) {
      for (std::size_t i = 0; i < k; ++i) buf(Eigen::Index(i)) = v(Eigen::Index(base + target_off[i]), col);
      res.noalias() = u * buf;
      for (std::size_t i = 0; i < k; ++i) v(Eigen::Index(base + target_off[i]), col) = res(Eigen::Index(i));
    }
}

// Common single-qubit and small gates.
namespace gates {

inline ComplexMatrix pauli_x() {
  ComplexMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline ComplexMatrix pauli_y() {
  ComplexMatrix m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}
inline ComplexMatrix pauli_z() {
  ComplexMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
inline ComplexMatrix hadamard() {
  ComplexMatrix m(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  m << s, s, s, -s;
  return m;
}
inline ComplexMatrix ry(double theta) {
  ComplexMatrix m(2, 2);
  m << std::cos(theta / 2), -std::sin(theta / 2), std::sin(theta / 2), std::cos(theta / 2);
  return m;
}

// |c><c| (x) 1 + ... : u applied to the target when every control qubit is 1.
inline ComplexMatrix controlled(const ComplexMatrix& u, std::size_t n_controls) {
  const std::size_t c = std::size_t(1) << n_controls;
  const Eigen::Index t = u.rows();
  ComplexMatrix m = identity(c * std::size_t(t));
  m.bottomRightCorner(t, t) = u;
  return m;
}

inline ComplexMatrix cnot() { return controlled(pauli_x(), 1); }
inline ComplexMatrix toffoli() { return controlled(pauli_x(), 2); }

inline ComplexMatrix swap(std::size_t d) {
  ComplexMatrix m = ComplexMatrix::Zero(Eigen::Index(d * d), Eigen::Index(d * d));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) m(Eigen::Index(j * d + i), Eigen::Index(i * d + j)) = 1.0;
  return m;
}

// Swap of two qubits controlled by a third (control first).
inline ComplexMatrix cswap() {
  ComplexMatrix m = identity(8);
  m.bottomRightCorner(4, 4) = swap(2);
  return m;
}

inline ComplexMatrix permutation(const std::vector<std::size_t>& perm) {
  const std::size_t d = perm.size();
  ComplexMatrix m = ComplexMatrix::Zero(Eigen::Index(d), Eigen::Index(d));
  for (std::size_t i = 0; i < d; ++i) m(Eigen::Index(perm[i]), Eigen::Index(i)) = 1.0;
  return m;
}

}  // namespace gates

inline ComplexVector bell_phi_plus(std::size_t d = 2) {
  ComplexVector v = ComplexVector::Zero(Eigen::Index(d * d));
  for (std::size_t i = 0; i < d; ++i) v(Eigen::Index(i * d + i)) = 1.0 / std::sqrt(double(d));
  return v;
}

inline ComplexVector kron_vec(const ComplexVector& a, const ComplexVector& b) {
  ComplexVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

}  // namespace qchan
