#pragma once

#include <numeric>
#include <optional>

#include "qchan/constructions.hpp"
#include "qchan/lp.hpp"
#include "qchan/sdp.hpp"

namespace qchan {

struct FeasibilityReport {
  Verdict status = Verdict::Inconclusive;
  double residual = 0.0;
  std::size_t iterations = 0;
  double tol = 1e-7;
  std::string method;
  // certificates
  std::vector<double> weights;            // LHV: w_lambda
  std::vector<ComplexMatrix> states;      // LHS: sigma_lambda
  std::optional<ComplexMatrix> moment;    // almost-quantum: flattened Gamma
  double reconstruction_error = 0.0;      // certificate vs input

  bool feasible() const { return status == Verdict::Feasible; }
};

// ---------------------------------------------------------------------------
// Deterministic strategies

// Party k answers response[k][x] on input x.
struct DeterministicStrategy {
  std::vector<std::vector<std::size_t>> response;

  double value(const std::vector<std::size_t>& a, const std::vector<std::size_t>& x) const {
    for (std::size_t k = 0; k < response.size(); ++k)
      if (response[k][x[k]] != a[k]) return 0.0;
    return 1.0;
  }
};

inline constexpr std::size_t kStrategyCap = 65536;

inline std::size_t strategy_count(std::size_t n, std::size_t m, std::size_t d) { return ipow(ipow(d, m), n); }

inline std::vector<DeterministicStrategy> deterministic_strategies(std::size_t n, std::size_t m, std::size_t d,
                                                                   std::size_t cap = kStrategyCap) {
  const std::size_t per = ipow(d, m);
  const std::size_t total = strategy_count(n, m, d);
  require(total <= cap, "strategy count " + std::to_string(total) + " exceeds cap " + std::to_string(cap));
  std::vector<DeterministicStrategy> out;
  out.reserve(total);
  const auto pdims = uniform_dims(n, per), fdims = uniform_dims(m, d);
  for (std::size_t l = 0; l < total; ++l) {
    DeterministicStrategy s;
    for (auto f : digits_of(l, pdims)) s.response.push_back(digits_of(f, fdims));
    out.push_back(std::move(s));
  }
  return out;
}

namespace detail {

// rows (x, a) in table order, columns strategies
inline Eigen::MatrixXd strategy_matrix(std::size_t n, std::size_t m, std::size_t d, const std::vector<DeterministicStrategy>& s) {
  const std::size_t nx = ipow(m, n), na = ipow(d, n);
  Eigen::MatrixXd dm = Eigen::MatrixXd::Zero(Eigen::Index(nx * na), Eigen::Index(s.size()));
  const auto xdims = uniform_dims(n, m), adims = uniform_dims(n, d);
  for (std::size_t x = 0; x < nx; ++x) {
    const auto xd = digits_of(x, xdims);
    for (std::size_t a = 0; a < na; ++a) {
      const auto ad = digits_of(a, adims);
      for (std::size_t l = 0; l < s.size(); ++l) dm(Eigen::Index(x * na + a), Eigen::Index(l)) = s[l].value(ad, xd);
    }
  }
  return dm;
}

}  // namespace detail

// p = sum_l w_l D_l, w >= 0, sum w = 1.
inline FeasibilityReport lhv_membership(const Correlation& c, double tol = 1e-9, std::size_t cap = kStrategyCap) {
  c.validate();
  const auto strategies = deterministic_strategies(c.n_parties, c.m, c.d, cap);
  const Eigen::MatrixXd dm = detail::strategy_matrix(c.n_parties, c.m, c.d, strategies);
  Eigen::MatrixXd a{dm.rows() + 1, dm.cols()};
  a.topRows(dm.rows()) = dm;
  a.row(dm.rows()).setOnes();
  Eigen::VectorXd b{dm.rows() + 1};
  for (std::size_t i = 0; i < c.table.size(); ++i) b(Eigen::Index(i)) = c.table[i];
  b(dm.rows()) = 1.0;
  const LpFeasibility lp = simplex_feasibility(a, b, tol);
  FeasibilityReport rep;
  rep.method = "phase-1 simplex";
  rep.tol = tol;
  rep.iterations = lp.pivots;
  rep.residual = lp.infeasibility;
  rep.status = lp.feasible ? Verdict::Feasible : Verdict::NumericallyInfeasible;
  if (lp.feasible) {
    rep.weights.assign(lp.x.data(), lp.x.data() + lp.x.size());
    rep.reconstruction_error = (a * lp.x - b).cwiseAbs().maxCoeff();
  }
  return rep;
}

// sigma_{a|x} = sum_l D_l(a|x) sigma_l with sigma_l >= 0, by alternating
// projections. Each matrix entry of sigma is an independent copy of the same
// linear system, so the affine projection uses one pseudo-inverse.
inline FeasibilityReport lhs_membership(const Assemblage& as, const SolverOptions& opts = {}, std::size_t cap = kStrategyCap) {
  as.validate(opts.tol);
  const auto strategies = deterministic_strategies(as.n_untrusted, as.m, as.d, cap);
  const Eigen::MatrixXd dm = detail::strategy_matrix(as.n_untrusted, as.m, as.d, strategies);
  const Eigen::MatrixXd pinv = dm.completeOrthogonalDecomposition().pseudoInverse();
  const std::size_t L = strategies.size(), rows = std::size_t(dm.rows());
  const auto db = Eigen::Index(as.d_B);
  // targets per matrix entry
  Eigen::MatrixXcd target{Eigen::Index(rows), db * db};
  for (std::size_t r = 0; r < rows; ++r)
    target.row(Eigen::Index(r)) = Eigen::Map<const Eigen::RowVectorXcd>(as.elements[r].data(), db * db);
  const Eigen::MatrixXcd dmc = dm.cast<Complex>(), pinvc = pinv.cast<Complex>();

  FeasibilityReport rep;
  rep.method = "alternating projections (LHS)";
  rep.tol = opts.tol;
  const double consistency = (dmc * (pinvc * target) - target).cwiseAbs().maxCoeff();
  if (consistency > 1e-9) {
    rep.status = Verdict::NumericallyInfeasible;
    rep.residual = consistency;
    return rep;
  }

  auto to_matrix = [&](const BlockPoint& p) {
    Eigen::MatrixXcd s{Eigen::Index(L), db * db};
    for (std::size_t l = 0; l < L; ++l) s.row(Eigen::Index(l)) = Eigen::Map<const Eigen::RowVectorXcd>(p[l].data(), db * db);
    return s;
  };
  auto from_matrix = [&](const Eigen::MatrixXcd& s) {
    BlockPoint p(L);
    for (std::size_t l = 0; l < L; ++l) {
      Eigen::RowVectorXcd row = s.row(Eigen::Index(l));
      p[l] = Eigen::Map<ComplexMatrix>(row.data(), db, db);
    }
    return p;
  };
  auto affine = [&](const BlockPoint& p) {
    Eigen::MatrixXcd s = to_matrix(p);
    s -= pinvc * (dmc * s - target);
    return from_matrix(s);
  };
  BlockPoint init(L, ComplexMatrix::Zero(db, db));
  const auto ar = alternating_feasibility(init, affine, opts);
  rep.status = ar.status;
  rep.residual = ar.residual;
  rep.iterations = ar.iterations;
  if (ar.status == Verdict::Feasible) {
    for (const auto& s : ar.point) rep.states.push_back(psd_part(0.5 * (s + s.adjoint())));
    rep.reconstruction_error = (dmc * to_matrix(rep.states) - target).cwiseAbs().maxCoeff();
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Words and moment matrices

// code[k] = 0 when party k is absent, otherwise 1 + x*d + a.
struct Word {
  std::vector<std::size_t> code;

  bool has(std::size_t k) const { return code[k] != 0; }
  std::size_t x(std::size_t k, std::size_t d) const { return (code[k] - 1) / d; }
  std::size_t a(std::size_t k, std::size_t d) const { return (code[k] - 1) % d; }
  bool empty() const {
    return std::all_of(code.begin(), code.end(), [](std::size_t c) { return c == 0; });
  }
};

inline bool orthogonal(const Word& u, const Word& v, std::size_t d) {
  for (std::size_t k = 0; k < u.code.size(); ++k)
    if (u.has(k) && v.has(k) && u.x(k, d) == v.x(k, d) && u.a(k, d) != v.a(k, d)) return true;
  return false;
}

inline std::string word_name(const Word& w, std::size_t d) {
  if (w.empty()) return "()";
  std::string a, x;
  for (std::size_t k = 0; k < w.code.size(); ++k) {
    if (!w.has(k)) {
      a += '-';
      x += '-';
      continue;
    }
    a += std::to_string(w.a(k, d));
    x += std::to_string(w.x(k, d));
  }
  return "(" + a + "|" + x + ")";
}

inline constexpr std::size_t kMomentCap = 400;

// Words in mixed-radix order, party 1 most significant; index 0 is the
// empty word.
inline std::vector<Word> enumerate_words(std::size_t n, std::size_t m, std::size_t d) {
  const std::size_t base = 1 + m * d;
  std::vector<Word> out;
  for (std::size_t i = 0; i < ipow(base, n); ++i) out.push_back({digits_of(i, uniform_dims(n, base))});
  return out;
}

// Block positions (u, v) joined into classes whose blocks must agree, with a
// flag for positions that enter as the adjoint.
struct MomentSkeleton {
  std::size_t n_parties = 0, m = 0, d = 0, d_B = 1;
  std::vector<Word> words;
  std::vector<std::pair<std::size_t, std::size_t>> orthogonal_pairs;
  std::vector<std::pair<std::size_t, std::size_t>> identifications;  // pairs of block positions p = u*W + v
  // classes: members are node ids 2*p + adjoint
  std::vector<std::vector<std::size_t>> classes;
  std::vector<int> zero_class;  // per class: forced to zero

  std::size_t size() const { return words.size(); }
  std::size_t word_index(const Word& w) const { return index_of_digits(w.code, uniform_dims(n_parties, 1 + m * d)); }
  std::size_t flat_dim() const { return size() * d_B; }
};

namespace detail {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void join(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace detail

inline MomentSkeleton build_moment_skeleton(std::size_t n, std::size_t m, std::size_t d, std::size_t d_B,
                                            std::size_t cap = kMomentCap) {
  require(n >= 1 && m >= 1 && d >= 1 && d_B >= 1, "moment skeleton: empty scenario");
  const std::size_t W = ipow(1 + m * d, n);
  require(W * d_B <= cap, "moment matrix size " + std::to_string(W * d_B) + " exceeds cap " + std::to_string(cap));
  MomentSkeleton sk;
  sk.n_parties = n;
  sk.m = m;
  sk.d = d;
  sk.d_B = d_B;
  sk.words = enumerate_words(n, m, d);
  detail::UnionFind uf(2 * W * W);
  auto node = [W](std::size_t u, std::size_t v, std::size_t adj) { return 2 * (u * W + v) + adj; };
  for (std::size_t u = 0; u < W; ++u)
    for (std::size_t v = 0; v < W; ++v) {
      // Gamma_{v,u} = Gamma_{u,v}^dagger
      uf.join(node(u, v, 0), node(v, u, 1));
      const Word& wu = sk.words[u];
      const Word& wv = sk.words[v];
      if (orthogonal(wu, wv, d)) sk.orthogonal_pairs.push_back({u, v});
      for (std::size_t k = 0; k < n; ++k) {
        if (!wu.has(k) || wu.code[k] != wv.code[k]) continue;
        Word su = wu, sv = wv;
        su.code[k] = 0;
        sv.code[k] = 0;
        const std::size_t iu = sk.word_index(su), iv = sk.word_index(sv);
        sk.identifications.push_back({u * W + v, iu * W + v});
        sk.identifications.push_back({u * W + v, u * W + iv});
        for (std::size_t adj = 0; adj < 2; ++adj) {
          uf.join(node(u, v, adj), node(iu, v, adj));
          uf.join(node(u, v, adj), node(u, iv, adj));
        }
      }
    }
  std::vector<long> class_of(2 * W * W, -1);
  for (std::size_t i = 0; i < 2 * W * W; ++i) {
    const std::size_t r = uf.find(i);
    if (class_of[r] < 0) {
      class_of[r] = long(sk.classes.size());
      sk.classes.emplace_back();
    }
    sk.classes[std::size_t(class_of[r])].push_back(i);
  }
  sk.zero_class.assign(sk.classes.size(), 0);
  for (auto [u, v] : sk.orthogonal_pairs) {
    sk.zero_class[std::size_t(class_of[uf.find(node(u, v, 0))])] = 1;
    sk.zero_class[std::size_t(class_of[uf.find(node(u, v, 1))])] = 1;
  }
  return sk;
}

// sigma of a partial word: marginal of the assemblage over the absent parties
// (their inputs fixed to 0). The empty word gives rho_B.
inline ComplexMatrix word_marginal(const Assemblage& as, const Word& w) {
  const std::size_t n = as.n_untrusted;
  ComplexMatrix s = ComplexMatrix::Zero(Eigen::Index(as.d_B), Eigen::Index(as.d_B));
  std::vector<std::size_t> x(n, 0);
  for (std::size_t k = 0; k < n; ++k)
    if (w.has(k)) x[k] = w.x(k, as.d);
  const std::size_t xi = index_of_digits(x, uniform_dims(n, as.m));
  const auto adims = uniform_dims(n, as.d);
  for (std::size_t a = 0; a < as.n_outcomes(); ++a) {
    const auto ad = digits_of(a, adims);
    bool match = true;
    for (std::size_t k = 0; k < n; ++k)
      if (w.has(k) && ad[k] != w.a(k, as.d)) match = false;
    if (match) s += as.at(a, xi);
  }
  return s;
}

struct MomentMatrix {
  std::size_t n_parties = 0, m = 0, d = 0, d_B = 1;
  ComplexMatrix flat;  // |W| d_B square

  std::size_t n_words() const { return std::size_t(flat.rows()) / d_B; }
  ComplexMatrix block(std::size_t u, std::size_t v) const {
    const auto b = Eigen::Index(d_B);
    return flat.block(Eigen::Index(u) * b, Eigen::Index(v) * b, b, b);
  }
};

// Orthogonal projection onto {Gamma : Hermitian, (ii), (iii), (iv), (v)}.
class MomentAffineSet {
 public:
  MomentAffineSet(MomentSkeleton sk, const Assemblage& as, double tol = 1e-9) : sk_(std::move(sk)) {
    require(as.n_untrusted == sk_.n_parties && as.m == sk_.m && as.d == sk_.d && as.d_B == sk_.d_B,
            "assemblage does not match the moment skeleton");
    const std::size_t W = sk_.size();
    const auto b = Eigen::Index(sk_.d_B);
    anchor_.assign(sk_.classes.size(), std::nullopt);
    std::vector<std::optional<ComplexMatrix>> node_anchor(2 * W * W);
    for (std::size_t v = 0; v < W; ++v) {
      const ComplexMatrix s = word_marginal(as, sk_.words[v]);
      node_anchor[2 * v] = s;                 // (empty, v)
      node_anchor[2 * v + 1] = s.adjoint();   // (empty, v) as adjoint
    }
    for (std::size_t c = 0; c < sk_.classes.size(); ++c) {
      if (sk_.zero_class[c]) anchor_[c] = ComplexMatrix::Zero(b, b);
      for (auto nd : sk_.classes[c]) {
        if (!node_anchor[nd]) continue;
        if (!anchor_[c]) {
          anchor_[c] = *node_anchor[nd];
        } else {
          consistency_ = std::max(consistency_, max_abs(*anchor_[c] - *node_anchor[nd]));
        }
      }
    }
    consistent_ = consistency_ <= tol;
  }

  bool consistent() const { return consistent_; }
  double consistency_residual() const { return consistency_; }
  const MomentSkeleton& skeleton() const { return sk_; }

  ComplexMatrix project(const ComplexMatrix& x) const {
    const std::size_t W = sk_.size();
    const auto b = Eigen::Index(sk_.d_B);
    ComplexMatrix out{x.rows(), x.cols()};
    auto blk = [&](const ComplexMatrix& m, std::size_t p) {
      return m.block(Eigen::Index(p / W) * b, Eigen::Index(p % W) * b, b, b);
    };
    for (std::size_t c = 0; c < sk_.classes.size(); ++c) {
      ComplexMatrix val;
      if (anchor_[c]) {
        val = *anchor_[c];
      } else {
        val = ComplexMatrix::Zero(b, b);
        for (auto nd : sk_.classes[c]) {
          const ComplexMatrix e = blk(x, nd / 2);
          val += (nd & 1) ? ComplexMatrix(e.adjoint()) : e;
        }
        val /= double(sk_.classes[c].size());
      }
      for (auto nd : sk_.classes[c]) {
        const std::size_t p = nd / 2;
        out.block(Eigen::Index(p / W) * b, Eigen::Index(p % W) * b, b, b) = (nd & 1) ? ComplexMatrix(val.adjoint()) : val;
      }
    }
    return out;
  }

 private:
  MomentSkeleton sk_;
  std::vector<std::optional<ComplexMatrix>> anchor_;
  double consistency_ = 0.0;
  bool consistent_ = true;
};

// Residual of each defining condition, reported separately.
struct MomentConditions {
  double psd = 0.0;           // (i): magnitude of the most negative eigenvalue
  double orthogonality = 0.0; // (ii)
  double normalization = 0.0; // (iii)
  double anchors = 0.0;       // (iv)
  double identification = 0.0;// (v)
  double hermiticity = 0.0;

  double worst() const { return std::max({psd, orthogonality, normalization, anchors, identification, hermiticity}); }
};

inline MomentConditions check_moment_conditions(const MomentMatrix& g, const MomentSkeleton& sk, const Assemblage& as) {
  require(std::size_t(g.flat.rows()) == sk.flat_dim() && g.flat.rows() == g.flat.cols(), "moment matrix has wrong size");
  MomentConditions r;
  const std::size_t W = sk.size();
  r.hermiticity = max_abs(g.flat - g.flat.adjoint());
  r.psd = std::max(0.0, -min_eigenvalue(0.5 * (g.flat + g.flat.adjoint())));
  for (auto [u, v] : sk.orthogonal_pairs) r.orthogonality = std::max(r.orthogonality, max_abs(g.block(u, v)));
  r.normalization = max_abs(g.block(0, 0) - as.rho_B(0));
  for (std::size_t v = 0; v < W; ++v) r.anchors = std::max(r.anchors, max_abs(g.block(0, v) - word_marginal(as, sk.words[v])));
  for (auto [p, q] : sk.identifications)
    r.identification = std::max(r.identification, max_abs(g.block(p / W, p % W) - g.block(q / W, q % W)));
  return r;
}

// Gamma[(u,j),(v,l)] = <w_{v,l}|w_{u,j}> with w_{u,j} the j-th column of
// Pi_u |psi> viewed as a K x B array. Gamma_{empty,u} = sigma_u.
inline MomentMatrix moment_matrix_from_realization(const ProjectiveRealization& r) {
  const MomentSkeleton sk = build_moment_skeleton(r.n_parties, r.m, r.d, r.d_B, std::numeric_limits<std::size_t>::max());
  const std::size_t W = sk.size();
  const auto b = Eigen::Index(r.d_B), k = Eigen::Index(r.d_K);
  ComplexMatrix cols{k, Eigen::Index(W) * b};
  for (std::size_t u = 0; u < W; ++u) {
    ComplexVector v = r.state;
    for (std::size_t p = 0; p < r.n_parties; ++p) {
      if (!sk.words[u].has(p)) continue;
      Eigen::Map<const ComplexMatrix> vm(v.data(), b, k);
      ComplexMatrix nv = vm * r.proj(p, sk.words[u].a(p, r.d), sk.words[u].x(p, r.d)).transpose();
      v = Eigen::Map<ComplexVector>(nv.data(), nv.size());
    }
    Eigen::Map<const ComplexMatrix> vm(v.data(), b, k);  // vm(j, i)
    cols.middleCols(Eigen::Index(u) * b, b) = vm.transpose();
  }
  MomentMatrix g{r.n_parties, r.m, r.d, r.d_B, ComplexMatrix()};
  g.flat = (cols.adjoint() * cols).conjugate();
  return g;
}

// Gamma_{u,v} = sum_l D_l(u) D_l(v) sigma_l
inline MomentMatrix moment_matrix_from_lhs(std::size_t n, std::size_t m, std::size_t d, const std::vector<ComplexMatrix>& states) {
  const auto strategies = deterministic_strategies(n, m, d);
  require(states.size() == strategies.size(), "one hidden state per deterministic strategy is required");
  const std::size_t db = std::size_t(states.at(0).rows());
  const auto words = enumerate_words(n, m, d);
  const std::size_t W = words.size();
  const auto b = Eigen::Index(db);
  MomentMatrix g{n, m, d, db, ComplexMatrix::Zero(Eigen::Index(W) * b, Eigen::Index(W) * b)};
  for (std::size_t l = 0; l < strategies.size(); ++l) {
    Eigen::VectorXd ind = Eigen::VectorXd::Zero(Eigen::Index(W));
    for (std::size_t u = 0; u < W; ++u) {
      double v = 1.0;
      for (std::size_t k = 0; k < n; ++k)
        if (words[u].has(k) && strategies[l].response[k][words[u].x(k, d)] != words[u].a(k, d)) v = 0.0;
      ind(Eigen::Index(u)) = v;
    }
    g.flat += kron(ComplexMatrix((ind * ind.transpose()).cast<Complex>()), states[l]);
  }
  return g;
}

// Orthonormal basis of the complement of span{ e_v - sum_a e_{(a|x)v} }: for
// any Gamma meeting (ii)-(v) the Gram vectors obey |v> = sum_a |(a|x) v>, so
// every feasible Gamma has its range inside this subspace.
inline ComplexMatrix moment_face_basis(const MomentSkeleton& sk) {
  const std::size_t W = sk.size();
  std::vector<Eigen::VectorXd> z;
  for (std::size_t v = 0; v < W; ++v)
    for (std::size_t k = 0; k < sk.n_parties; ++k) {
      if (sk.words[v].has(k)) continue;
      for (std::size_t x = 0; x < sk.m; ++x) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(Eigen::Index(W));
        e(Eigen::Index(v)) = 1.0;
        Word w = sk.words[v];
        for (std::size_t a = 0; a < sk.d; ++a) {
          w.code[k] = 1 + x * sk.d + a;
          e(Eigen::Index(sk.word_index(w))) -= 1.0;
        }
        z.push_back(e);
      }
    }
  Eigen::MatrixXd zz = Eigen::MatrixXd::Zero(Eigen::Index(W), Eigen::Index(W));
  for (const auto& e : z) zz += e * e.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(zz);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) < 1e-9) keep.push_back(i);
  Eigen::MatrixXd q{Eigen::Index(W), Eigen::Index(keep.size())};
  for (std::size_t c = 0; c < keep.size(); ++c) q.col(Eigen::Index(c)) = es.eigenvectors().col(keep[c]);
  return kron(ComplexMatrix(q.cast<Complex>()), identity(sk.d_B));
}

inline FeasibilityReport almost_quantum_membership(const Assemblage& as, const SolverOptions& opts = {},
                                                   std::optional<MomentMatrix> init = std::nullopt,
                                                   std::size_t cap = kMomentCap) {
  as.validate(opts.tol);
  require(is_nonsignalling_assemblage(as, 1e-7).ok, "almost-quantum membership needs a non-signalling assemblage");
  MomentAffineSet aff(build_moment_skeleton(as.n_untrusted, as.m, as.d, as.d_B, cap), as);
  FeasibilityReport rep;
  rep.method = "alternating projections (moment matrix)";
  rep.tol = opts.tol;
  if (!aff.consistent()) {
    rep.status = Verdict::NumericallyInfeasible;
    rep.residual = aff.consistency_residual();
    return rep;
  }
  const auto n = Eigen::Index(aff.skeleton().flat_dim());
  BlockPoint start{init ? init->flat : ComplexMatrix(ComplexMatrix::Zero(n, n))};
  auto affine = [&](const BlockPoint& p) { return BlockPoint{aff.project(p[0])}; };
  const ComplexMatrix q = moment_face_basis(aff.skeleton());
  auto face = [&](const BlockPoint& p) {
    return BlockPoint{ComplexMatrix(q * project_psd_cone(q.adjoint() * p[0] * q) * q.adjoint())};
  };
  const auto ar = alternating_feasibility(start, affine, opts, face);
  rep.status = ar.status;
  rep.residual = ar.residual;
  rep.iterations = ar.iterations;
  rep.moment = ar.point[0];
  return rep;
}

inline FeasibilityReport almost_quantum_membership(const Correlation& c, const SolverOptions& opts = {},
                                                   std::optional<MomentMatrix> init = std::nullopt,
                                                   std::size_t cap = kMomentCap) {
  return almost_quantum_membership(assemblage_from_correlation(c), opts, std::move(init), cap);
}

// Gram vectors of Gamma (conjugated so that Gamma_{empty,u} = sigma_u holds
// for the reproduced assemblage), projectors onto spans of word vectors, last
// outcome by completion.
inline ProjectiveRealization gram_realization(const MomentMatrix& g, const Assemblage& as, double tol = 1e-6) {
  const MomentSkeleton sk = build_moment_skeleton(g.n_parties, g.m, g.d, g.d_B, std::numeric_limits<std::size_t>::max());
  const auto cond = check_moment_conditions(g, sk, as);
  require(cond.worst() <= tol, "moment matrix fails its conditions (worst residual " + std::to_string(cond.worst()) + ")");
  const auto e = eig_hermitian(0.5 * (g.flat + g.flat.adjoint()));
  const double top = std::max(e.values.front(), 1e-300);
  std::size_t rank = 0;
  while (rank < e.values.size() && e.values[rank] > 1e-10 * top) ++rank;
  const auto r = Eigen::Index(rank);
  // Gamma = Y^dagger Y, columns of conj(Y) are the vectors w
  ComplexMatrix y = e.vectors.leftCols(r).adjoint();
  for (Eigen::Index i = 0; i < r; ++i) y.row(i) *= std::sqrt(e.values[std::size_t(i)]);
  const ComplexMatrix w = y.conjugate();
  const std::size_t W = sk.size();
  const auto b = Eigen::Index(g.d_B);

  ProjectiveRealization out;
  out.n_parties = g.n_parties;
  out.m = g.m;
  out.d = g.d;
  out.d_K = rank;
  out.d_B = g.d_B;
  out.state = ComplexVector::Zero(r * b);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < b; ++j) out.state(i * b + j) = w(i, j);
  out.projectors.assign(g.n_parties, std::vector<std::vector<ComplexMatrix>>(g.m));
  for (std::size_t k = 0; k < g.n_parties; ++k)
    for (std::size_t x = 0; x < g.m; ++x) {
      ComplexMatrix rest = identity(rank);
      for (std::size_t a = 0; a + 1 < g.d; ++a) {
        std::vector<Eigen::Index> idx;
        for (std::size_t u = 0; u < W; ++u)
          if (sk.words[u].has(k) && sk.words[u].x(k, g.d) == x && sk.words[u].a(k, g.d) == a)
            for (Eigen::Index j = 0; j < b; ++j) idx.push_back(Eigen::Index(u) * b + j);
        ComplexMatrix span{r, Eigen::Index(idx.size())};
        for (std::size_t c = 0; c < idx.size(); ++c) span.col(Eigen::Index(c)) = w.col(idx[c]);
        Eigen::JacobiSVD<ComplexMatrix> svd(span, Eigen::ComputeThinU);
        const auto& sv = svd.singularValues();
        const double smax = sv.size() ? sv(0) : 0.0;
        Eigen::Index keep = 0;
        while (keep < sv.size() && sv(keep) > 1e-7 * std::max(1.0, smax)) ++keep;
        const ComplexMatrix q = svd.matrixU().leftCols(keep);
        ComplexMatrix p = q * q.adjoint();
        out.projectors[k][x].push_back(p);
        rest -= p;
      }
      out.projectors[k][x].push_back(rest);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Witnesses

enum class WitnessVerdict { NotAlmostQuantum, NotLocal, Inconclusive };

inline std::string witness_name(WitnessVerdict v) {
  switch (v) {
    case WitnessVerdict::NotAlmostQuantum:
      return "not-almost-quantum";
    case WitnessVerdict::NotLocal:
      return "not-local";
    case WitnessVerdict::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

struct WitnessResult {
  double value = 0.0;
  WitnessVerdict verdict = WitnessVerdict::Inconclusive;
};

inline WitnessResult tsirelson_witness(const Correlation& c, double margin = 1e-6) {
  WitnessResult w;
  w.value = chsh_best(c);
  if (w.value > 2.0 * std::sqrt(2.0) + margin)
    w.verdict = WitnessVerdict::NotAlmostQuantum;
  else if (w.value > 2.0 + margin)
    w.verdict = WitnessVerdict::NotLocal;
  return w;
}

}  // namespace qchan
