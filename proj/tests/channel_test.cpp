#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qchan/channel.hpp"
#include "qchan/random.hpp"

using namespace qchan;

namespace {

SystemLayout in1(std::size_t d) { return SystemLayout({{"A.in", d, Role::UntrustedIn}}); }
SystemLayout out1(std::size_t d) { return SystemLayout({{"A.out", d, Role::UntrustedOut}}); }

Channel random_channel(Rng& rng, std::size_t din, std::size_t dout, std::size_t n_kraus) {
  // Stinespring: random isometry din -> dout * n_kraus
  ComplexMatrix v = rng.unitary(dout * n_kraus).leftCols(Eigen::Index(din));
  KrausSet ks;
  for (std::size_t k = 0; k < n_kraus; ++k) {
    ComplexMatrix op{Eigen::Index(dout), Eigen::Index(din)};
    for (std::size_t o = 0; o < dout; ++o) op.row(Eigen::Index(o)) = v.row(Eigen::Index(o * n_kraus + k));
    ks.operators.push_back(op);
  }
  return choi_from_kraus(ks, in1(din), out1(dout));
}

}  // namespace

TEST(Channel, RejectsInvalidChoi) {
  EXPECT_THROW(Channel(in1(2), out1(2), identity(4)), ValidationError);  // trace 4
  ComplexMatrix bad = identity(4) / 4.0;
  bad(0, 0) = -0.25;
  bad(1, 1) = 0.75;
  EXPECT_THROW(Channel(in1(2), out1(2), bad), ValidationError);
  EXPECT_THROW(Channel(in1(2), out1(2), identity(3) / 3.0), ValidationError);
}

TEST(Channel, IdentityAndDepolarizing) {
  Rng rng(10);
  Channel id = identity_channel(in1(3), out1(3));
  ComplexMatrix rho = rng.density(3);
  EXPECT_LT(max_abs(qchan::apply(id, rho) - rho), 1e-14);
  Channel dep(in1(3), out1(3), identity(9) / 9.0);
  EXPECT_LT(max_abs(qchan::apply(dep, rho) - identity(3) / 3.0), 1e-14);
}

TEST(Channel, ApplyMatchesKrausOracle) {
  Rng rng(11);
  for (int t = 0; t < 10; ++t) {
    const std::size_t din = 2 + rng.index(2), dout = 2 + rng.index(3);
    KrausSet ks;
    ComplexMatrix v = rng.unitary(dout * 3).leftCols(Eigen::Index(din));
    for (std::size_t k = 0; k < 3; ++k) {
      ComplexMatrix op{Eigen::Index(dout), Eigen::Index(din)};
      for (std::size_t o = 0; o < dout; ++o) op.row(Eigen::Index(o)) = v.row(Eigen::Index(o * 3 + k));
      ks.operators.push_back(op);
    }
    Channel ch = choi_from_kraus(ks, in1(din), out1(dout));
    ComplexMatrix rho = rng.density(din);
    ComplexMatrix expect = ComplexMatrix::Zero(Eigen::Index(dout), Eigen::Index(dout));
    for (const auto& k : ks.operators) expect += k * rho * k.adjoint();
    EXPECT_LT(frobenius(qchan::apply(ch, rho) - expect), 1e-9);
    EXPECT_NEAR(qchan::apply(ch, rho).trace().real(), 1.0, 1e-12);
  }
}

TEST(Channel, Linearity) {
  Rng rng(12);
  Channel ch = random_channel(rng, 3, 2, 2);
  ComplexMatrix r = rng.density(3), s = rng.density(3);
  EXPECT_LT(max_abs(qchan::apply(ch, 0.3 * r + 0.7 * s) - 0.3 * qchan::apply(ch, r) - 0.7 * qchan::apply(ch, s)), 1e-10);
}

TEST(Kraus, UnitaryRoundTripAndRank) {
  Rng rng(13);
  ComplexMatrix u = rng.unitary(3);
  Channel ch = unitary_channel(in1(3), out1(3), u);
  auto ks = kraus_from_choi(ch);
  ASSERT_EQ(ks.operators.size(), 1u);
  const Complex phase = (ks.operators[0].adjoint() * u).trace() / 3.0;
  EXPECT_NEAR(std::abs(phase), 1.0, 1e-10);
  EXPECT_LT(max_abs(ks.operators[0] * phase - u), 1e-10);

  for (int t = 0; t < 10; ++t) {
    const std::size_t r = 1 + rng.index(3);
    Channel c = random_channel(rng, 2, 3, r);
    auto k = kraus_from_choi(c);
    EXPECT_EQ(k.operators.size(), r);
    Channel back = choi_from_kraus(k, c.layout_in(), c.layout_out());
    EXPECT_LT(frobenius(back.choi() - c.choi()), 1e-9);
  }
}

TEST(Dual, UnitaryAndUnitality) {
  Rng rng(14);
  ComplexMatrix u = rng.unitary(2);
  Channel ch = unitary_channel(in1(2), out1(2), u);
  ComplexMatrix e = rng.hermitian(2);
  EXPECT_LT(max_abs(dual_channel(ch)(e) - u.adjoint() * e * u), 1e-12);
  for (int t = 0; t < 5; ++t) {
    Channel c = random_channel(rng, 3, 2, 3);
    auto dual = dual_channel(c);
    EXPECT_LT(max_abs(dual(identity(2)) - identity(3)), 1e-12);
    ComplexMatrix f = rng.hermitian(2), rho = rng.density(3);
    EXPECT_NEAR(std::abs((f * qchan::apply(c, rho)).trace() - (dual(f) * rho).trace()), 0.0, 1e-9);
  }
}

TEST(Compose, ParallelAndSerial) {
  Rng rng(15);
  SystemLayout in2({{"A.in", 2, Role::UntrustedIn}, {"B.in", 2, Role::UntrustedIn}});
  SystemLayout out2({{"A.out", 2, Role::UntrustedOut}, {"B.out", 2, Role::UntrustedOut}});
  Channel ida = identity_channel(in1(2), out1(2));
  Channel idb = identity_channel(SystemLayout({{"B.in", 2, Role::UntrustedIn}}), SystemLayout({{"B.out", 2, Role::UntrustedOut}}));
  EXPECT_LT(max_abs(compose_parallel(ida, idb).choi() - identity_channel(in2, out2).choi()), 1e-14);

  ComplexMatrix u = rng.unitary(2);
  Channel cu = unitary_channel(in1(2), out1(2), u);
  Channel cud = unitary_channel(SystemLayout({{"M.in", 2, Role::UntrustedIn}}), SystemLayout({{"M.out", 2, Role::UntrustedOut}}),
                                u.adjoint());
  EXPECT_LT(max_abs(compose_serial(cu, cud).choi() - identity_channel(in1(2), SystemLayout({{"M.out", 2, Role::UntrustedOut}})).choi()),
            1e-12);

  Channel a = random_channel(rng, 2, 3, 2);
  Channel b = choi_from_kraus(kraus_from_choi(random_channel(rng, 3, 2, 2)), SystemLayout({{"M.in", 3, Role::UntrustedIn}}),
                              SystemLayout({{"M.out", 2, Role::UntrustedOut}}));
  Channel ab = compose_serial(a, b);
  ComplexMatrix rho = rng.density(2);
  EXPECT_LT(frobenius(qchan::apply(ab, rho) - qchan::apply(b, qchan::apply(a, rho))), 1e-9);

  // parallel composition acts as a tensor product
  Channel pa = random_channel(rng, 2, 2, 2);
  Channel pb = unitary_channel(SystemLayout({{"B.in", 3, Role::UntrustedIn}}), SystemLayout({{"B.out", 3, Role::UntrustedOut}}),
                               rng.unitary(3));
  ComplexMatrix r1 = rng.density(2), r2 = rng.density(3);
  EXPECT_LT(frobenius(qchan::apply(compose_parallel(pa, pb), kron(r1, r2)) - kron(qchan::apply(pa, r1), qchan::apply(pb, r2))), 1e-10);
  EXPECT_THROW(compose_serial(a, a), ValidationError);
}

TEST(Circuit, EmptyIsIdentity) {
  CircuitChannel c;
  c.registers = SystemLayout({{"A.in", 2, Role::UntrustedIn}});
  c.keep = {{"A.out", Role::UntrustedOut, {"A.in"}}};
  Channel ch = compile_circuit(c);
  EXPECT_LT(max_abs(ch.choi() - projector(bell_phi_plus())), 1e-14);
}

TEST(Circuit, HadamardChoi) {
  CircuitChannel c;
  c.registers = SystemLayout({{"A.in", 2, Role::UntrustedIn}});
  c.gates = {{gates::hadamard(), {"A.in"}}};
  c.keep = {{"A.out", Role::UntrustedOut, {"A.in"}}};
  Channel ch = compile_circuit(c);
  ComplexMatrix v = kron(identity(2), gates::hadamard()) * bell_phi_plus();
  EXPECT_LT(max_abs(ch.choi() - projector(v)), 1e-14);
}

TEST(Circuit, RejectsBadCircuits) {
  CircuitChannel c;
  c.registers = SystemLayout({{"A.in", 2, Role::UntrustedIn}, {"E", 2, Role::Ancilla}});
  c.ancilla_prep = ket(2, 0);
  c.keep = {{"A.out", Role::UntrustedOut, {"A.in"}}};
  EXPECT_THROW(compile_circuit(c), ValidationError);  // E not covered
  c.discard = {"E"};
  c.gates = {{identity(3), {"A.in"}}};
  EXPECT_THROW(compile_circuit(c), ValidationError);
  c.gates = {{2.0 * identity(2), {"A.in"}}};
  EXPECT_THROW(compile_circuit(c), ValidationError);
  c.gates = {{gates::cnot(), {"A.in", "E"}}};
  EXPECT_NO_THROW(compile_circuit(c));
}

TEST(Circuit, MatchesDensityMatrixSimulation) {
  Rng rng(16);
  CircuitChannel c;
  c.registers = SystemLayout({{"A.in", 2, Role::UntrustedIn}, {"B.in", 3, Role::UntrustedIn}, {"E", 2, Role::Ancilla}});
  c.ancilla_prep = rng.density(2);
  ComplexMatrix g1 = rng.unitary(4), g2 = rng.unitary(6);
  c.gates = {{g1, {"E", "A.in"}}, {g2, {"B.in", "E"}}};
  c.discard = {"E"};
  c.keep = {{"B.out", Role::UntrustedOut, {"B.in"}}, {"A.out", Role::UntrustedOut, {"A.in"}}};
  Channel ch = compile_circuit(c);
  ComplexMatrix rho = rng.density(6);
  ComplexMatrix sim = oracle::simulate(rho, c.ancilla_prep, {2, 3, 2}, {{g1, {2, 0}}, {g2, {1, 2}}}, {false, false, true});
  // simulation output is on (A, B); channel output on (B, A)
  ComplexMatrix expect = permute_subsystems(sim, {2, 3}, {1, 0});
  EXPECT_LT(frobenius(qchan::apply(ch, rho) - expect), 1e-10);
}

TEST(Circuit, EqualTotalUnitaryEqualChoi) {
  Rng rng(17);
  ComplexMatrix u = rng.unitary(2), w = rng.unitary(2);
  CircuitChannel a;
  a.registers = SystemLayout({{"A.in", 2, Role::UntrustedIn}});
  a.keep = {{"A.out", Role::UntrustedOut, {"A.in"}}};
  CircuitChannel b = a;
  a.gates = {{u, {"A.in"}}, {w, {"A.in"}}};
  b.gates = {{w * u, {"A.in"}}};
  EXPECT_LT(frobenius(compile_circuit(a).choi() - compile_circuit(b).choi()), 1e-9);
}
