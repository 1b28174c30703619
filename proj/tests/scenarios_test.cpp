#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qchan/causality.hpp"
#include "qchan/random.hpp"
#include "qchan/scenarios.hpp"

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

SystemLayout layout(std::vector<Subsystem> s) { return SystemLayout(std::move(s)); }

}  // namespace

TEST(Correlation, PrBoxIsNonSignallingWithChshFour) {
  Correlation c = pr_table();
  EXPECT_NO_THROW(c.validate());
  EXPECT_TRUE(is_nonsignalling_correlation(c).ok);
  EXPECT_NEAR(chsh_value(c), 4.0, 1e-12);
  EXPECT_NEAR(chsh_best(c), 4.0, 1e-12);
}

TEST(Correlation, SignallingTableDetected) {
  // b = x: Alice signals to Bob
  Correlation c(2, 2, 2);
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y) c.at(x, x * 2 + y) = 1.0;
  EXPECT_NO_THROW(c.validate());
  auto ns = is_nonsignalling_correlation(c);
  EXPECT_FALSE(ns.ok);
  EXPECT_NEAR(ns.max_residual, 1.0, 1e-12);
}

TEST(Correlation, ValidationRejectsBadRows) {
  Correlation c = pr_table();
  c.at(0, 0) = 0.7;
  EXPECT_THROW(c.validate(), ValidationError);
  c = pr_table();
  c.at(0, 0) = -0.1;
  c.at(3, 0) = 0.6;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Correlation, CoarseGrainAndChshRelabelling) {
  Correlation c = pr_table();
  // flipping Bob's outcome maps CHSH to -4, best stays 4
  Correlation f(2, 2, 2);
  for (std::size_t x = 0; x < 4; ++x)
    for (std::size_t a = 0; a < 4; ++a) f.at(a ^ 1, x) = c.at(a, x);
  EXPECT_NEAR(chsh_value(f), -4.0, 1e-12);
  EXPECT_NEAR(chsh_best(f), 4.0, 1e-12);
  Correlation g = coarse_grain_outputs(c, {0, 0}, 1);
  for (std::size_t x = 0; x < 4; ++x) EXPECT_NEAR(g.at(0, x), 1.0, 1e-15);
}

TEST(Assemblage, NonSignallingIncludesFixedReducedState) {
  Rng rng(20);
  ComplexMatrix r0 = rng.density(2), r1 = rng.density(2);
  Assemblage as(1, 2, 1, 2);
  as.at(0, 0) = r0;
  as.at(0, 1) = r1;
  EXPECT_THROW(as.validate(), ValidationError);
  EXPECT_FALSE(is_nonsignalling_assemblage(as).ok);
  as.at(0, 1) = r0;
  EXPECT_TRUE(is_nonsignalling_assemblage(as).ok);
}

TEST(Assemblage, TraceAndMeasureTrusted) {
  Assemblage as = assemblage_from_correlation(pr_table());
  EXPECT_NEAR(chsh_value(trace_assemblage(as)), 4.0, 1e-12);
  Rng rng(21);
  // measuring a 1-dim trusted system with a trivial POVM
  Assemblage small(1, 2, 2, 2);
  ComplexMatrix rho = rng.density(2);
  small.at(0, 0) = basis_projector(2, 0) * rho * basis_projector(2, 0);
  small.at(1, 0) = basis_projector(2, 1) * rho * basis_projector(2, 1);
  small.at(0, 1) = 0.5 * rho;
  small.at(1, 1) = 0.5 * rho;
  EXPECT_FALSE(is_nonsignalling_assemblage(small).ok);
  Correlation c = measure_trusted(small, {{basis_projector(2, 0), basis_projector(2, 1)}, {basis_projector(2, 0), basis_projector(2, 1)}});
  EXPECT_NO_THROW(c.validate());
}

TEST(Extraction, IdentityChannelCorrelations) {
  auto in = layout({{"A.in", 2, Role::UntrustedIn}});
  auto out = layout({{"A.out", 2, Role::UntrustedOut}});
  Correlation c = correlations_from_channel(identity_channel(in, out));
  EXPECT_NEAR(c.at(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(c.at(1, 1), 1.0, 1e-14);
  // Hadamard-rotated input basis gives uniform outcomes
  Correlation h = correlations_from_channel(identity_channel(in, out), {gates::hadamard()});
  EXPECT_NEAR(h.at(0, 0), 0.5, 1e-14);
}

TEST(Extraction, PrKrausChannel) {
  KrausSet ks{oracle::pr_kraus()};
  auto in = layout({{"A.in", 2, Role::UntrustedIn}, {"B.in", 2, Role::UntrustedIn}});
  auto out = layout({{"A.out", 2, Role::UntrustedOut}, {"B.out", 2, Role::UntrustedOut}});
  Channel ch = choi_from_kraus(ks, in, out);
  Correlation c = correlations_from_channel(ch);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(c.table[i], pr_table().table[i], 1e-12);
  EXPECT_TRUE(is_causal(ch).causal);
}

TEST(Extraction, DistributedMeasurementAndTeleportage) {
  // A maps its qubit into a classical outcome; B is trusted identity
  auto in = layout({{"A.in", 2, Role::UntrustedIn}, {"B.in", 2, Role::TrustedIn}});
  auto out = layout({{"A.out", 2, Role::UntrustedOut}, {"B.out", 2, Role::TrustedOut}});
  Channel ch = channel_from_action(in, out, [](const ComplexMatrix& rho) {
    ComplexMatrix out = ComplexMatrix::Zero(4, 4);
    for (std::size_t a = 0; a < 2; ++a) {
      ComplexMatrix p = kron(basis_projector(2, a), identity(2));
      out += p * rho * p;
    }
    return out;
  });
  Teleportage t = teleportage_from_channel(ch);
  EXPECT_NO_THROW(t.validate());
  EXPECT_TRUE(is_nonsignalling_teleportage(t).ok);
  // outcome a leaves the trusted output at |0> and reads |a><a| of the input
  Rng rng(22);
  ComplexMatrix rho = rng.density(2);
  for (std::size_t a = 0; a < 2; ++a)
    EXPECT_LT(max_abs(t.apply(a, rho) - rho(Eigen::Index(a), Eigen::Index(a)) * basis_projector(2, 0)), 1e-12);

  auto in1 = layout({{"A.in", 2, Role::UntrustedIn}});
  auto out1 = layout({{"A.out", 2, Role::UntrustedOut}});
  DistributedMeasurement dm = distributed_measurement_from_channel(identity_channel(in1, out1));
  EXPECT_NO_THROW(dm.validate());
  EXPECT_LT(max_abs(dm.elements[1] - basis_projector(2, 1)), 1e-12);
}

TEST(Extraction, GeneralPreparationsMatchBasis) {
  KrausSet ks{oracle::pr_kraus()};
  auto in = layout({{"A.in", 2, Role::UntrustedIn}, {"B.in", 2, Role::UntrustedIn}});
  auto out = layout({{"A.out", 2, Role::UntrustedOut}, {"B.out", 2, Role::UntrustedOut}});
  Channel ch = choi_from_kraus(ks, in, out);
  Preparations preps(2, {basis_projector(2, 0), basis_projector(2, 1)});
  Povms povms(2, {basis_projector(2, 0), basis_projector(2, 1)});
  Correlation c = correlations_general(ch, preps, povms);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(c.table[i], pr_table().table[i], 1e-12);
}

TEST(Causality, SwapIsNotCausalAndWitnessAgrees) {
  auto in = layout({{"A.in", 2, Role::UntrustedIn}, {"B.in", 2, Role::UntrustedIn}});
  auto out = layout({{"A.out", 2, Role::UntrustedOut}, {"B.out", 2, Role::UntrustedOut}});
  Channel sw = unitary_channel(in, out, gates::swap(2));
  EXPECT_FALSE(is_causal(sw).causal);
  EXPECT_FALSE(is_semicausal(sw, {1}, {0}).semicausal);
  EXPECT_NEAR(signalling_witness(sw, {1}, {0}), 1.0, 1e-12);
  Channel id = identity_channel(in, out);
  EXPECT_TRUE(is_causal(id).causal);
  EXPECT_NEAR(signalling_witness(id, {1}, {0}), 0.0, 1e-12);
}

TEST(Causality, OneWaySignalling) {
  // dephase A, then CNOT A -> B. A coherent CNOT would let B signal back
  // through phase kickback.
  auto in = layout({{"A.in", 2, Role::UntrustedIn}, {"B.in", 2, Role::UntrustedIn}});
  auto out = layout({{"A.out", 2, Role::UntrustedOut}, {"B.out", 2, Role::UntrustedOut}});
  Channel ch = channel_from_action(in, out, [](const ComplexMatrix& rho) {
    ComplexMatrix r = ComplexMatrix::Zero(4, 4);
    for (std::size_t a = 0; a < 2; ++a) {
      ComplexMatrix p = kron(basis_projector(2, a), identity(2));
      r += p * rho * p;
    }
    return ComplexMatrix(gates::cnot() * r * gates::cnot().adjoint());
  });
  EXPECT_FALSE(is_semicausal(unitary_channel(in, out, gates::cnot()), {1}, {0}).semicausal);
  EXPECT_TRUE(is_semicausal(ch, {1}, {0}).semicausal);
  EXPECT_FALSE(is_semicausal(ch, {0}, {1}).semicausal);
  EXPECT_GT(signalling_witness(ch, {0}, {1}), 0.5);
  EXPECT_LT(signalling_witness(ch, {1}, {0}), 1e-12);
  EXPECT_THROW(is_semicausal(ch, {0}, {0}), ValidationError);
}

TEST(Causality, RandomProductChannelsAreCausal) {
  Rng rng(23);
  for (int t = 0; t < 5; ++t) {
    ComplexMatrix ua = rng.unitary(2), ub = rng.unitary(3);
    auto in = layout({{"A.in", 2, Role::UntrustedIn}, {"B.in", 3, Role::UntrustedIn}});
    auto out = layout({{"A.out", 2, Role::UntrustedOut}, {"B.out", 3, Role::UntrustedOut}});
    Channel ch = unitary_channel(in, out, kron(ua, ub));
    auto rep = is_causal(ch);
    EXPECT_TRUE(rep.causal);
    EXPECT_EQ(rep.bipartitions.size(), 2u);
  }
}
