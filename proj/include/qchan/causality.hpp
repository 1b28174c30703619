#pragma once

#include "qchan/channel.hpp"

namespace qchan {

inline constexpr double kCausalTol = 1e-7;

struct SemicausalResult {
  std::vector<std::size_t> blocked_from;  // party indices B (cannot signal ...)
  std::vector<std::size_t> to;            // ... to these parties A
  bool semicausal = false;
  double residual = 0.0;
  ComplexMatrix sigma;  // factor on in(A) (x) out(A)
};

struct CausalityReport {
  std::vector<SemicausalResult> bipartitions;
  bool causal = true;
  double tol = kCausalTol;
};

namespace detail {

inline void check_partition(std::size_t n, const std::vector<std::size_t>& b, const std::vector<std::size_t>& a) {
  std::vector<int> seen(n, 0);
  for (auto k : b) {
    require(k < n, "unknown party index " + std::to_string(k));
    require(seen[k]++ == 0, "party " + std::to_string(k) + " listed twice");
  }
  for (auto k : a) {
    require(k < n, "unknown party index " + std::to_string(k));
    require(seen[k]++ == 0, "party sets overlap at party " + std::to_string(k));
  }
  for (std::size_t k = 0; k < n; ++k) require(seen[k] == 1, "party " + std::to_string(k) + " missing from bipartition");
}

}  // namespace detail

// Checks B -/-> A: tr_{out(B)} Omega = Sigma (x) 1_{in(B)} / d_{in(B)}.
// The trusted party, when present and not named, joins the `to` side.
inline SemicausalResult is_semicausal(const Channel& ch, std::vector<std::size_t> blocked_from, std::vector<std::size_t> to,
                                      double tol = kCausalTol) {
  const auto parties = ch.parties();
  const std::size_t n = parties.size();
  if (n > 0 && parties.back().trusted) {
    const std::size_t t = n - 1;
    if (std::find(blocked_from.begin(), blocked_from.end(), t) == blocked_from.end() &&
        std::find(to.begin(), to.end(), t) == to.end())
      to.push_back(t);
  }
  detail::check_partition(n, blocked_from, to);
  require(!blocked_from.empty(), "blocked_from must be non-empty");

  const SystemLayout full = ch.choi_layout();
  std::vector<std::string> out_b, in_b, in_a, out_a;
  for (auto k : blocked_from) {
    out_b.push_back(parties[k].out_label);
    in_b.push_back(parties[k].in_label);
  }
  for (auto k : to) {
    in_a.push_back(parties[k].in_label);
    out_a.push_back(parties[k].out_label);
  }

  const ComplexMatrix reduced = partial_trace(ch.choi(), full, out_b);
  const SystemLayout reduced_layout = full.without(out_b);
  SemicausalResult res;
  res.blocked_from = blocked_from;
  res.to = to;
  res.sigma = partial_trace(reduced, reduced_layout, in_b);
  const SystemLayout sigma_layout = reduced_layout.without(in_b);

  std::size_t d_in_b = 1;
  for (const auto& l : in_b) d_in_b *= full.dim_of(l);
  // expected = Sigma (x) 1/d on sigma_layout ++ in(B), reordered to reduced_layout
  SystemLayout expected_layout = sigma_layout.concat(full.select(in_b));
  ComplexMatrix expected = kron(res.sigma, identity(d_in_b) / double(d_in_b));
  expected = permute_subsystems(expected, expected_layout, reduced_layout.labels());
  res.residual = frobenius(reduced - expected);
  res.semicausal = res.residual < tol;
  return res;
}

// All non-trivial bipartitions of the parties (trusted party included), both
// directions.
inline CausalityReport is_causal(const Channel& ch, double tol = kCausalTol) {
  const std::size_t n = ch.parties().size();
  CausalityReport rep;
  rep.tol = tol;
  if (n < 2) return rep;
  for (std::size_t mask = 1; mask + 1 < (std::size_t(1) << n); ++mask) {
    std::vector<std::size_t> b, a;
    for (std::size_t k = 0; k < n; ++k) ((mask >> k) & 1 ? b : a).push_back(k);
    rep.bipartitions.push_back(is_semicausal(ch, b, a, tol));
    rep.causal = rep.causal && rep.bipartitions.back().semicausal;
  }
  return rep;
}

// Pure states whose projectors span all d x d matrices.
inline std::vector<ComplexVector> tomographic_states(std::size_t d) {
  std::vector<ComplexVector> out;
  for (std::size_t i = 0; i < d; ++i) out.push_back(ket(d, i));
  const double s = 1.0 / std::sqrt(2.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      out.push_back(s * (ket(d, i) + ket(d, j)));
      out.push_back(s * (ket(d, i) + Complex(0, 1) * ket(d, j)));
    }
  return out;
}

// Operational cross-check: largest trace distance between receiver output
// marginals when only the senders' inputs change, over product inputs drawn
// from tomographically complete sets. Zero iff the senders cannot signal the
// receivers on these inputs.
inline double signalling_witness(const Channel& ch, const std::vector<std::size_t>& senders,
                                 const std::vector<std::size_t>& receivers) {
  const auto parties = ch.parties();
  const std::size_t n = parties.size();
  std::vector<int> role(n, 0);  // 0 context, 1 sender, 2 receiver
  for (auto k : senders) {
    require(k < n, "unknown sender party");
    role[k] = 1;
  }
  for (auto k : receivers) {
    require(k < n && role[k] == 0, "receiver party unknown or also a sender");
    role[k] = 2;
  }
  if (senders.empty() || receivers.empty()) return 0.0;

  std::vector<std::vector<ComplexVector>> sets(n);
  std::vector<std::size_t> sizes(n);
  for (std::size_t k = 0; k < n; ++k) {
    sets[k] = tomographic_states(parties[k].d_in);
    sizes[k] = sets[k].size();
  }
  std::vector<std::size_t> sdims, cdims;
  std::vector<std::size_t> spos, cpos;
  for (std::size_t k = 0; k < n; ++k) {
    if (role[k] == 1) {
      spos.push_back(k);
      sdims.push_back(sizes[k]);
    } else {
      cpos.push_back(k);
      cdims.push_back(sizes[k]);
    }
  }
  std::vector<std::string> traced;
  for (std::size_t k = 0; k < n; ++k)
    if (role[k] != 2) traced.push_back(parties[k].out_label);

  // input layout order of parties
  std::vector<std::size_t> in_index(n);
  for (std::size_t k = 0; k < n; ++k) in_index[k] = ch.layout_in().index_of(parties[k].in_label);

  double best = 0.0;
  std::vector<std::size_t> choice(n);
  for (std::size_t c = 0; c < product(cdims); ++c) {
    const auto cd = digits_of(c, cdims);
    for (std::size_t k = 0; k < cpos.size(); ++k) choice[cpos[k]] = cd[k];
    std::vector<ComplexMatrix> marginals;
    for (std::size_t s = 0; s < product(sdims); ++s) {
      const auto sd = digits_of(s, sdims);
      for (std::size_t k = 0; k < spos.size(); ++k) choice[spos[k]] = sd[k];
      std::vector<ComplexMatrix> factors(n);
      for (std::size_t k = 0; k < n; ++k) factors[in_index[k]] = projector(sets[k][choice[k]]);
      marginals.push_back(partial_trace(qchan::apply(ch, kron(factors)), ch.layout_out(), traced));
    }
    for (std::size_t i = 0; i < marginals.size(); ++i)
      for (std::size_t j = i + 1; j < marginals.size(); ++j)
        best = std::max(best, trace_distance(marginals[i], marginals[j]));
  }
  return best;
}

}  // namespace qchan
