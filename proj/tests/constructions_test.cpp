#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qchan/constructions.hpp"
#include "qchan/random.hpp"

using namespace qchan;

namespace {

Correlation pr_table() {
  Correlation c(2, 2, 2);
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) c.at(a * 2 + b, x * 2 + y) = oracle::pr_probability(a, b, x, y);
  return c;
}

Assemblage random_ns_assemblage(Rng& rng, std::size_t m, std::size_t d, std::size_t db) {
  ComplexMatrix rho = rng.density(db);
  ComplexMatrix s = psd_sqrt(rho);
  Assemblage as(1, m, d, db);
  for (std::size_t x = 0; x < m; ++x) {
    auto povm = rng.povm(db, d);
    for (std::size_t a = 0; a < d; ++a) as.at(a, x) = s * povm[a] * s;
  }
  return as;
}

}  // namespace

TEST(Gallery, PrBoxCircuitMatchesKrausOracle) {
  Channel ch = compile_circuit(pr_box_channel());
  ComplexMatrix want = oracle::choi_of(4, 4, [](const ComplexMatrix& rho) {
    ComplexMatrix out = ComplexMatrix::Zero(4, 4);
    for (const auto& k : oracle::pr_kraus()) out += k * rho * k.adjoint();
    return out;
  });
  EXPECT_LT(max_abs(ch.choi() - want), 1e-12);
  Correlation c = correlations_from_channel(ch);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(c.table[i], pr_table().table[i], 1e-12);
  EXPECT_NEAR(chsh_value(c), 4.0, 1e-9);
  auto rep = is_causal(ch);
  EXPECT_TRUE(rep.causal);
  for (const auto& b : rep.bipartitions) EXPECT_LT(b.residual, 1e-9);
}

TEST(Gallery, SingletReachesTsirelson) {
  auto circ = singlet_tsirelson_channel();
  Channel ch = compile_circuit(circ);
  Correlation c = correlations_from_channel(ch);
  EXPECT_NEAR(chsh_best(c), 2.0 * std::sqrt(2.0), 1e-9);
  EXPECT_TRUE(is_causal(ch).causal);
  // state-vector cross-check of one input pair through the explicit simulation
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y) {
      ComplexMatrix rho = kron(basis_projector(2, x), basis_projector(2, y));
      std::vector<std::pair<ComplexMatrix, std::vector<std::size_t>>> gl;
      for (const auto& g : circ.gates) {
        std::vector<std::size_t> t;
        for (const auto& l : g.acts_on) t.push_back(circ.registers.index_of(l));
        gl.push_back({g.unitary, t});
      }
      ComplexMatrix out = oracle::simulate(rho, circ.ancilla_prep, {2, 2, 2, 2}, gl, {true, true, false, false});
      for (std::size_t a = 0; a < 4; ++a) EXPECT_NEAR(out(Eigen::Index(a), Eigen::Index(a)).real(), c.at(a, x * 2 + y), 1e-12);
    }
}

TEST(Gallery, PqSteeringPrAssemblage) {
  Channel ch = compile_circuit(pq_steering_pr_channel());
  Assemblage as = assemblage_from_channel(ch);
  for (std::size_t x = 0; x < 4; ++x)
    for (std::size_t a = 0; a < 4; ++a) EXPECT_LT(max_abs(as.at(a, x) - pr_table().at(a, x) * identity(2) / 2.0), 1e-9);
  EXPECT_TRUE(is_nonsignalling_assemblage(as).ok);
  EXPECT_TRUE(is_causal(ch).causal);
}

TEST(Gallery, AlphaChannelChsh) {
  for (double alpha : {0.0, 1.0 / 6.0, 0.5, 1.0}) {
    Channel ch = compile_circuit(pq_steering_alpha_channel(alpha));
    Correlation c = coarse_grain_outputs(correlations_from_channel(ch), alpha_outcome_map(), 2);
    EXPECT_NEAR(chsh_value(c), 4.0 - 6.0 * alpha, 1e-9) << "alpha " << alpha;
    EXPECT_TRUE(is_causal(ch).causal) << "alpha " << alpha;
  }
}

TEST(Gallery, TeleportationByproducts) {
  Channel ch = compile_circuit(teleportation_channel());
  Teleportage t = teleportage_from_channel(ch);
  EXPECT_TRUE(is_nonsignalling_teleportage(t).ok);
  Rng rng(30);
  ComplexMatrix rho = rng.density(2);
  for (std::size_t a = 0; a < 4; ++a) {
    ComplexMatrix s = teleportation_byproduct(a);
    EXPECT_LT(max_abs(t.apply(a, rho) - 0.25 * s * rho * s.adjoint()), 1e-12);
  }
}

TEST(Gallery, BellMeasurementProjectors) {
  Channel ch = compile_circuit(bell_measurement_channel());
  DistributedMeasurement dm = distributed_measurement_from_channel(ch);
  const double s = 1.0 / std::sqrt(2.0);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) {
      // outcome (a, b): (Z^a (x) X^b) |Phi+>
      ComplexMatrix op = kron(a ? gates::pauli_z() : identity(2), identity(2)) * kron(identity(2), b ? gates::pauli_x() : identity(2));
      ComplexVector v = op * (s * (ket(4, 0) + ket(4, 3)));
      EXPECT_LT(max_abs(dm.elements[a * 2 + b] - projector(v)), 1e-12);
    }
  EXPECT_FALSE(is_nonsignalling_distributed_measurement(dm).ok);
  EXPECT_FALSE(is_causal(ch).causal);
}

TEST(Gallery, SignallingChannelsWitnessed) {
  for (const auto& g : signalling_gallery()) {
    Channel ch = compile_circuit(g.circuit);
    EXPECT_FALSE(is_causal(ch).causal) << g.name;
  }
  Channel sw = compile_circuit(swap_channel());
  EXPECT_NEAR(signalling_witness(sw, {0}, {1}), 1.0, 1e-12);
  Channel cyc = compile_circuit(cyclic_shift_channel());
  EXPECT_NEAR(signalling_witness(cyc, {0}, {1}), 1.0, 1e-12);
  EXPECT_NEAR(signalling_witness(cyc, {1}, {0}), 0.0, 1e-12);
}

TEST(Gallery, CausalGalleryAndOracleEquivalence) {
  Rng rng(31);
  for (const auto& g : causal_gallery()) {
    Channel ch = compile_circuit(g.circuit);
    EXPECT_TRUE(is_causal(ch).causal) << g.name;
    KrausSet ks = circuit_kraus(g.circuit);
    for (int t = 0; t < 3; ++t) {
      ComplexMatrix rho = rng.density(ch.d_in());
      EXPECT_LT(max_abs(qchan::apply(ch, rho) - ks.apply(rho)), 1e-9) << g.name;
    }
  }
}

TEST(Canonical, CorrelationAndAssemblageRoundTrip) {
  Channel ch = canonical_channel_from_correlations(pr_table());
  Correlation c = correlations_from_channel(ch);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(c.table[i], pr_table().table[i], 1e-12);
  EXPECT_TRUE(is_causal(ch).causal);

  Rng rng(32);
  Assemblage as = random_ns_assemblage(rng, 2, 2, 2);
  Channel ca = canonical_channel_from_assemblage(as);
  Assemblage back = assemblage_from_channel(ca);
  for (std::size_t i = 0; i < as.elements.size(); ++i) EXPECT_LT(max_abs(back.elements[i] - as.elements[i]), 1e-12);
  EXPECT_TRUE(is_causal(ca).causal);

  Assemblage bad(1, 2, 1, 2);
  bad.at(0, 0) = basis_projector(2, 0);
  bad.at(0, 1) = basis_projector(2, 1);
  EXPECT_THROW(canonical_channel_from_assemblage(bad), ValidationError);
}

TEST(Realization, TsirelsonAlmostLocalizable) {
  auto r = tsirelson_realization();
  EXPECT_NO_THROW(r.validate());
  Correlation direct = correlations_from_realization(r);
  EXPECT_NEAR(chsh_best(direct), 2.0 * std::sqrt(2.0), 1e-9);
  for (std::vector<std::size_t> order : {std::vector<std::size_t>{0, 1}, {1, 0}}) {
    Channel ch = compile_circuit(almost_localizable_from_realization(r, order));
    Correlation c = correlations_from_channel(ch);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(c.table[i], direct.table[i], 1e-12);
    EXPECT_TRUE(is_causal(ch).causal);
  }
}

TEST(Realization, RejectsNonCommutingOnState) {
  // both parties act on the same qubit with incompatible bases
  ProjectiveRealization r;
  r.n_parties = 2;
  r.m = 1;
  r.d = 2;
  r.d_K = 2;
  r.d_B = 1;
  r.state = (ket(2, 0) + ket(2, 1)) / std::sqrt(2.0);
  r.state = ket(2, 0);
  r.projectors = {{basis_projectors(identity(2))}, {basis_projectors(gates::hadamard())}};
  EXPECT_THROW(r.validate(), ValidationError);
}

TEST(Realization, AssemblageWithTrustedParty) {
  // Alice measures Z or X on her half of |Phi+>; Bob is trusted
  std::vector<std::vector<std::vector<ComplexMatrix>>> local{{basis_projectors(identity(2)), basis_projectors(gates::hadamard())}};
  auto r = tensor_product_realization(bell_phi_plus(), {2}, 2, local);
  Assemblage as = assemblage_from_commuting_projectors(r);
  EXPECT_TRUE(is_nonsignalling_assemblage(as).ok);
  EXPECT_LT(max_abs(as.at(1, 0) - basis_projector(2, 1) / 2.0), 1e-12);
  Channel ch = compile_circuit(almost_localizable_from_realization(r));
  Assemblage ex = assemblage_from_channel(ch);
  for (std::size_t i = 0; i < as.elements.size(); ++i) EXPECT_LT(max_abs(ex.elements[i] - as.elements[i]), 1e-12);
}

TEST(Ghjw, RandomAssemblages) {
  Rng rng(33);
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = 2 + rng.index(2), d = 2 + rng.index(2), db = 2 + rng.index(2);
    Assemblage as = random_ns_assemblage(rng, m, d, db);
    auto g = ghjw_realize_assemblage(as);
    EXPECT_LT(g.residual, 1e-8);
    for (std::size_t x = 0; x < m; ++x) {
      ComplexMatrix s = ComplexMatrix::Zero(Eigen::Index(db), Eigen::Index(db));
      for (const auto& e : g.povms[x]) {
        EXPECT_TRUE(is_psd(e, 1e-9));
        s += e;
      }
      EXPECT_LT(max_abs(s - identity(db)), 1e-9);
    }
  }
}

TEST(Ghjw, RankDeficientReducedState) {
  Rng rng(34);
  ComplexMatrix rho = rng.density(3, 1);
  Assemblage as(1, 2, 2, 3);
  for (std::size_t x = 0; x < 2; ++x) {
    as.at(0, x) = 0.3 * rho;
    as.at(1, x) = 0.7 * rho;
  }
  auto g = ghjw_realize_assemblage(as);
  EXPECT_LT(g.residual, 1e-8);
}

TEST(Ghjw, TeleportationTeleportage) {
  Teleportage t = teleportage_from_channel(compile_circuit(teleportation_channel()));
  auto g = ghjw_realize_teleportage(t);
  EXPECT_LT(g.residual, 1e-8);
}
