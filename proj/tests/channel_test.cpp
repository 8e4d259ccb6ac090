#include "qcompat/channel.hpp"

#include <gtest/gtest.h>

namespace qcompat {
namespace {

using linalg::frobenius_distance;
using linalg::identity;
using linalg::kron;

CMatrix ket_bra(int d, int i, int j) { return linalg::matrix_unit(d, i, j); }

Observable sharp_from(const CMatrix& s) {
  return Observable({(identity(2) + s) / 2.0, (identity(2) - s) / 2.0});
}

CMatrix random_operator(int d, std::uint64_t seed) {
  // Hermitian, not a state.
  CMatrix a = linalg::random_density_matrix(d, d, seed) - linalg::random_density_matrix(d, 1, seed + 1);
  return linalg::hermitian_part(a);
}

// Choi block of the CP map rho -> K rho K^dag.
CMatrix choi_of_operator(const CMatrix& k) {
  const int d_in = static_cast<int>(k.cols());
  const int d_out = static_cast<int>(k.rows());
  CMatrix j = CMatrix::Zero(d_in * d_out, d_in * d_out);
  for (int i = 0; i < d_in; ++i) {
    for (int jj = 0; jj < d_in; ++jj) {
      j.block(i * d_out, jj * d_out, d_out, d_out) = k * ket_bra(d_in, i, jj) * k.adjoint();
    }
  }
  return j;
}

TEST(Channel, ValidatesInvariants) {
  EXPECT_THROW(Channel(2, {2}, identity(4) * 2.0), std::invalid_argument);
  CMatrix neg = identity(4) / 2.0;
  neg(0, 0) = -0.1;
  EXPECT_THROW(Channel(2, {2}, neg), std::invalid_argument);
  EXPECT_THROW(Channel(2, {3}, identity(4)), std::invalid_argument);
  EXPECT_NO_THROW(Channel(2, {2}, identity(4) / 2.0));
}

TEST(Channel, NegativeEigenvalueIsNamed) {
  CMatrix j = identity(4) / 2.0;
  j(0, 1) = 0.9;
  j(1, 0) = 0.9;
  try {
    Channel(2, {2}, j);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("eigenvalue -0.4"), std::string::npos) << e.what();
  }
}

TEST(ChoiFromKraus, IdentityIsMaximallyEntangled) {
  for (int d : {2, 3}) {
    const Channel c = choi_from_kraus(KrausForm{d, {d}, {identity(d)}});
    EXPECT_NEAR(c.choi().trace().real(), d, 1e-12);
    const RVector ev = linalg::eigvalsh(c.choi());
    EXPECT_NEAR(ev(0), d, 1e-12);
    EXPECT_NEAR(ev(1), 0.0, 1e-12);
  }
}

TEST(ChoiFromKraus, ResetToZero) {
  const Channel c = choi_from_kraus(KrausForm{2, {2}, {ket_bra(2, 0, 0), ket_bra(2, 0, 1)}});
  EXPECT_LT(frobenius_distance(c.choi(), kron(identity(2), ket_bra(2, 0, 0))), 1e-15);
}

TEST(ChoiFromKraus, UnitaryHasRankOne) {
  const Channel c = choi_from_kraus(KrausForm{2, {2}, {linalg::pauli_x()}});
  const RVector ev = linalg::eigvalsh(c.choi());
  EXPECT_NEAR(ev(0), 2.0, 1e-12);
  EXPECT_NEAR(ev.tail(3).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(ChoiFromKraus, RejectsNonNormalized) {
  EXPECT_THROW(choi_from_kraus(KrausForm{2, {2}, {identity(2) * 1.1}}), std::invalid_argument);
}

TEST(KrausFromChoi, IdentityGivesSingleOperator) {
  const KrausForm k = kraus_from_choi(identity_channel(2));
  ASSERT_EQ(k.operators.size(), 1u);
  const cplx phase = k.operators[0](0, 0);
  EXPECT_NEAR(std::abs(phase), 1.0, 1e-12);
  EXPECT_LT((k.operators[0] - phase * identity(2)).norm(), 1e-12);
}

TEST(KrausFromChoi, MaximallyMixingHasFourOperators) {
  const Channel c = constant_channel(identity(2) / 2.0, 2);
  EXPECT_EQ(kraus_from_choi(c).operators.size(), 4u);
}

TEST(RepresentationRoundTrips, RandomChannels) {
  std::uint64_t seed = 0;
  for (int d_in = 1; d_in <= 4; ++d_in) {
    for (int d_out = 1; d_out <= 4; ++d_out) {
      const int d_env = std::max<int>(1 + (seed % 4), (d_in + d_out - 1) / d_out);
      const Channel c = random_channel(d_in, d_out, d_env, seed);
      ++seed;
      EXPECT_LT(frobenius_distance(choi_from_kraus(kraus_from_choi(c)).choi(), c.choi()), 1e-7);
      const StinespringForm s = minimal_stinespring(c);
      EXPECT_LT((s.isometry.adjoint() * s.isometry - identity(d_in)).norm(), 1e-9);
      EXPECT_LT(frobenius_distance(channel_from_stinespring(s).choi(), c.choi()), 1e-7);
      const StinespringForm s2 = stinespring_from_kraus(kraus_from_choi(c));
      EXPECT_LT(frobenius_distance(channel_from_stinespring(s2).choi(), c.choi()), 1e-7);
    }
  }
}

TEST(MinimalStinespring, EnvironmentDimensionIsChoiRank) {
  EXPECT_EQ(minimal_stinespring(identity_channel(2)).d_env, 1);
  EXPECT_EQ(minimal_stinespring(constant_channel(ket_bra(2, 0, 0), 2)).d_env, 2);
  EXPECT_EQ(minimal_stinespring(constant_channel(identity(2) / 2.0, 2)).d_env, 4);
  EXPECT_EQ(minimal_stinespring(random_channel(2, 3, 2, 5)).d_env, 2);
}

TEST(Apply, IdentityLeavesStateUnchanged) {
  const CMatrix rho = linalg::random_density_matrix(3, 2, 1);
  EXPECT_LT((apply(identity_channel(3), rho, Picture::kSchrodinger) - rho).norm(), 1e-14);
  EXPECT_LT((apply(identity_channel(3), rho, Picture::kHeisenberg) - rho).norm(), 1e-14);
}

TEST(Apply, ConstantChannelHeisenberg) {
  const CMatrix eta = linalg::random_density_matrix(3, 2, 2);
  const CMatrix a = random_operator(3, 3);
  const Channel c = constant_channel(eta, 2);
  const CMatrix out = apply(c, a, Picture::kHeisenberg);
  EXPECT_LT((out - (eta * a).trace() * identity(2)).norm(), 1e-12);
  EXPECT_LT((apply(c, linalg::random_density_matrix(2, 2, 4), Picture::kSchrodinger) - eta).norm(), 1e-12);
}

TEST(Apply, GammaWritesProbabilities) {
  const Observable m = random_observable(2, 3, 5);
  const CMatrix rho = linalg::random_density_matrix(2, 2, 6);
  const CMatrix out = apply(gamma_of_observable(m), rho, Picture::kSchrodinger);
  for (int x = 0; x < 3; ++x) {
    for (int y = 0; y < 3; ++y) {
      const cplx expected = x == y ? (rho * m.effect(x)).trace() : cplx(0.0);
      EXPECT_LT(std::abs(out(x, y) - expected), 1e-12);
    }
  }
}

TEST(Apply, DualityOnRandomPairs) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Channel c = random_channel(2 + s % 2, 2 + (s / 2) % 3, 1 + s % 3, s);
    const CMatrix rho = linalg::random_density_matrix(c.d_in(), 1 + s % c.d_in(), 100 + s);
    const CMatrix t = random_operator(c.d_out(), 200 + s);
    const cplx lhs = (rho * apply(c, t, Picture::kHeisenberg)).trace();
    const cplx rhs = (apply(c, rho, Picture::kSchrodinger) * t).trace();
    EXPECT_LT(std::abs(lhs - rhs), 1e-9);
  }
}

TEST(Apply, MatchesKrausSum) {
  const Channel c = random_channel(3, 2, 3, 9);
  const KrausForm k = kraus_from_choi(c);
  const CMatrix rho = linalg::random_density_matrix(3, 3, 10);
  CMatrix expected = CMatrix::Zero(2, 2);
  for (const auto& op : k.operators) expected += op * rho * op.adjoint();
  EXPECT_LT((apply(c, rho, Picture::kSchrodinger) - expected).norm(), 1e-9);
}

TEST(Apply, DimensionMismatchThrows) {
  EXPECT_THROW(apply(identity_channel(2), identity(3), Picture::kSchrodinger), std::invalid_argument);
}

TEST(Concatenate, IdentityIsNeutral) {
  const Channel c = random_channel(2, 3, 2, 11);
  EXPECT_LT(frobenius_distance(concatenate(c, identity_channel(2)).choi(), c.choi()), 1e-12);
  EXPECT_LT(frobenius_distance(concatenate(identity_channel(3), c).choi(), c.choi()), 1e-12);
}

TEST(Concatenate, ConstantAbsorbs) {
  const CMatrix eta = linalg::random_density_matrix(2, 2, 12);
  const Channel k = constant_channel(eta, 3);
  const Channel c = random_channel(2, 3, 2, 13);
  EXPECT_LT(frobenius_distance(concatenate(k, c).choi(), constant_channel(eta, 2).choi()), 1e-12);
}

TEST(Concatenate, MatchesKrausComposition) {
  const Channel a = random_channel(2, 3, 2, 14);
  const Channel b = random_channel(3, 2, 2, 15);
  KrausForm composed{2, {2}, {}};
  for (const auto& kb : kraus_from_choi(b).operators) {
    for (const auto& ka : kraus_from_choi(a).operators) composed.operators.push_back(kb * ka);
  }
  EXPECT_LT(frobenius_distance(concatenate(b, a).choi(), choi_from_kraus(composed).choi()), 1e-9);
}

TEST(Concatenate, PostprocessingOfGamma) {
  const Observable m = random_observable(2, 3, 16);
  const StochasticMatrix nu = random_stochastic_matrix(4, 3, 17);
  const Channel lhs = concatenate(postprocessing_channel(nu), gamma_of_observable(m));
  EXPECT_LT(frobenius_distance(lhs.choi(), gamma_of_observable(postprocess(m, nu)).choi()), 1e-12);
}

TEST(Concatenate, InterfaceMismatchThrows) {
  EXPECT_THROW(concatenate(identity_channel(2), identity_channel(3)), std::invalid_argument);
}

TEST(LinkProductAdjoint, IsAdjoint) {
  const Channel e = random_channel(2, 3, 2, 18);
  const CMatrix x = random_operator(6, 19);
  const CMatrix g = random_operator(4, 20);
  const cplx lhs = (g * link_product(e.choi(), 2, 3, x, 2)).trace();
  const cplx rhs = (link_product_adjoint(e.choi(), 2, 3, g, 2) * x).trace();
  EXPECT_LT(std::abs(lhs - rhs), 1e-12);
}

TEST(TensorProduct, IdentitiesGiveIdentity) {
  const Channel t = tensor_product(identity_channel(2), identity_channel(3));
  EXPECT_LT(frobenius_distance(t.choi(), identity_channel(6).choi()), 1e-14);
  EXPECT_EQ(t.out_dims(), (DimTuple{2, 3}));
}

TEST(TensorProduct, ActsFactorwise) {
  const Channel a = random_channel(2, 2, 2, 21);
  const Channel b = random_channel(3, 2, 2, 22);
  const CMatrix r1 = linalg::random_density_matrix(2, 2, 23);
  const CMatrix r2 = linalg::random_density_matrix(3, 2, 24);
  const CMatrix out = tensor_product(a, b).schrodinger(kron(r1, r2));
  EXPECT_LT((out - kron(a.schrodinger(r1), b.schrodinger(r2))).norm(), 1e-9);
}

TEST(TensorProduct, ChoiIsPermutedKron) {
  const Channel a = random_channel(2, 3, 2, 25);
  const Channel b = random_channel(2, 2, 2, 26);
  const CMatrix expected = linalg::permute_subsystems(kron(a.choi(), b.choi()), {2, 3, 2, 2}, {0, 2, 1, 3});
  EXPECT_LT(frobenius_distance(tensor_product(a, b).choi(), expected), 1e-15);
}

TEST(Conjugate, OfIdentityIsTrace) {
  const Channel c = conjugate(identity_channel(2));
  EXPECT_EQ(c.d_out(), 1);
  EXPECT_LT(frobenius_distance(c.choi(), identity(2)), 1e-12);
}

TEST(Conjugate, TracesOutTheOutput) {
  const Channel c = random_channel(2, 3, 2, 27);
  const StinespringForm s = minimal_stinespring(c);
  const Channel cc = conjugate(s);
  const CMatrix rho = linalg::random_density_matrix(2, 2, 28);
  const CMatrix big = s.isometry * rho * s.isometry.adjoint();
  EXPECT_LT((cc.schrodinger(rho) - linalg::partial_trace(big, {3, s.d_env}, {1})).norm(), 1e-12);
  EXPECT_LT((c.schrodinger(rho) - linalg::partial_trace(big, {3, s.d_env}, {0})).norm(), 1e-12);
}

TEST(Mix, SingleChannel) {
  const Channel c = random_channel(2, 2, 2, 29);
  EXPECT_LT(frobenius_distance(mix({c}, {1.0}).choi(), c.choi()), 1e-15);
}

TEST(Mix, DepolarizingIsPauli) {
  for (double l : {0.0, 0.3, 0.8, 1.0}) {
    const Channel dep = mix({identity_channel(2), constant_channel(identity(2) / 2.0, 2)}, {l, 1 - l});
    const double p = (1 - l) / 4;
    EXPECT_LT(frobenius_distance(dep.choi(), pauli_channel({p, p, p}).choi()), 1e-12);
  }
}

TEST(Mix, RejectsBadWeights) {
  const Channel c = identity_channel(2);
  EXPECT_THROW(mix({c, c}, {0.7, 0.7}), std::invalid_argument);
  EXPECT_THROW(mix({c, c}, {1.5, -0.5}), std::invalid_argument);
  EXPECT_THROW(mix({c, identity_channel(3)}, {0.5, 0.5}), std::invalid_argument);
}

TEST(Gamma, TrivialObservableIsConstant) {
  const Channel g = gamma_of_observable(Observable({identity(2)}));
  EXPECT_EQ(g.d_out(), 1);
  const Observable two({identity(2), CMatrix::Zero(2, 2)});
  EXPECT_LT(frobenius_distance(gamma_of_observable(two).choi(),
                               constant_channel(ket_bra(2, 0, 0), 2).choi()), 1e-15);
}

TEST(Gamma, SharpZIsDephasing) {
  const Channel g = gamma_of_observable(sharp_from(linalg::pauli_z()));
  CMatrix expected = CMatrix::Zero(4, 4);
  expected(0, 0) = 1.0;
  expected(3, 3) = 1.0;
  EXPECT_LT(frobenius_distance(g.choi(), expected), 1e-15);
}

TEST(Gamma, OutputsAreOrthogonalPureStatesPerOutcome) {
  // Heisenberg image of |x><x| is M(x); Schrodinger outputs are diagonal.
  const Observable m = random_observable(3, 4, 30);
  const Channel g = gamma_of_observable(m);
  for (int x = 0; x < 4; ++x) {
    EXPECT_LT((g.heisenberg(ket_bra(4, x, x)) - m.effect(x)).norm(), 1e-12);
  }
}

TEST(TransformObservable, Identity) {
  const Observable m = random_observable(2, 3, 31);
  const Observable t = transform_observable(identity_channel(2), m);
  for (int x = 0; x < 3; ++x) EXPECT_LT((t.effect(x) - m.effect(x)).norm(), 1e-14);
}

TEST(TransformObservable, PauliShrinksX) {
  const std::array<double, 3> p{0.1, 0.15, 0.2};
  const Observable t = transform_observable(pauli_channel(p), sharp_from(linalg::pauli_x()));
  const double eta = 1 - 2 * (p[1] + p[2]);
  EXPECT_LT((t.effect(0) - (identity(2) + eta * linalg::pauli_x()) / 2.0).norm(), 1e-12);
  EXPECT_LT((t.effect(1) - (identity(2) - eta * linalg::pauli_x()) / 2.0).norm(), 1e-12);
}

TEST(TransformObservable, ConstantTrivializes) {
  const CMatrix eta = linalg::random_density_matrix(3, 3, 32);
  const Observable m = random_observable(3, 2, 33);
  const Observable t = transform_observable(constant_channel(eta, 2), m);
  for (int x = 0; x < 2; ++x) {
    EXPECT_LT((t.effect(x) - (eta * m.effect(x)).trace() * identity(2)).norm(), 1e-12);
  }
}

TEST(TransformObservable, CommutesWithGamma) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Channel c = random_channel(2, 3, 2, 40 + s);
    const Observable m = random_observable(3, 3, 50 + s);
    const Channel lhs = concatenate(gamma_of_observable(m), c);
    EXPECT_LT(frobenius_distance(lhs.choi(), gamma_of_observable(transform_observable(c, m)).choi()), 1e-9);
  }
}

TEST(Postprocessing, IdentityMatrixGivesDephasing) {
  const StochasticMatrix nu(RMatrix::Identity(3, 3));
  EXPECT_LT(frobenius_distance(postprocessing_channel(nu).choi(), copying_channel(3, 1).choi()), 1e-15);
}

TEST(Postprocessing, AllMassToFirstOutcomeIsTrivial) {
  RMatrix nu = RMatrix::Zero(2, 3);
  nu.row(0).setOnes();
  const Observable n = postprocess(random_observable(2, 3, 34), StochasticMatrix(nu));
  EXPECT_LT((n.effect(0) - identity(2)).norm(), 1e-12);
  EXPECT_LT(n.effect(1).norm(), 1e-12);
}

TEST(Postprocessing, ReproducesEffectsAndExtraction) {
  const Observable m = random_observable(3, 3, 35);
  const StochasticMatrix nu = random_stochastic_matrix(2, 3, 36);
  const Observable n = postprocess(m, nu);
  for (int x = 0; x < 2; ++x) {
    CMatrix expected = CMatrix::Zero(3, 3);
    for (int y = 0; y < 3; ++y) expected += nu.matrix()(x, y) * m.effect(y);
    EXPECT_LT((n.effect(x) - expected).norm(), 1e-9);
  }
  EXPECT_LT((extract_stochastic_matrix(postprocessing_channel(nu)).matrix() - nu.matrix()).norm(), 1e-15);
}

TEST(StochasticMatrix, Validates) {
  RMatrix bad(2, 2);
  bad << 0.5, 0.2, 0.5, 0.7;
  EXPECT_THROW(StochasticMatrix{bad}, std::invalid_argument);
  bad << 1.2, 0.5, -0.2, 0.5;
  EXPECT_THROW(StochasticMatrix{bad}, std::invalid_argument);
}

TEST(Observable, Validates) {
  EXPECT_THROW(Observable({identity(2) * 0.5}), std::invalid_argument);
  EXPECT_THROW(Observable({identity(2) * 1.5, identity(2) * -0.5}), std::invalid_argument);
  EXPECT_THROW(Observable({identity(2)}, {0, 1}), std::invalid_argument);
  EXPECT_NO_THROW(Observable({identity(2) * 0.5, identity(2) * 0.5}, {-1, 1}));
}

TEST(Observable, MarginalsOfProductShape) {
  const Observable a = random_observable(2, 2, 37);
  const Observable b = random_observable(2, 3, 38);
  // Commuting product is not needed for marginals of a joint built as
  // G(x, y) = A(x)^(1/2) B(y) A(x)^(1/2).
  std::vector<CMatrix> g;
  for (int x = 0; x < 2; ++x) {
    const CMatrix r = linalg::psd_sqrt(a.effect(x));
    for (int y = 0; y < 3; ++y) g.push_back(linalg::hermitian_part(r * b.effect(y) * r));
  }
  const Observable joint(g, {}, {2, 3});
  const Observable ma = joint.marginal(0);
  for (int x = 0; x < 2; ++x) EXPECT_LT((ma.effect(x) - a.effect(x)).norm(), 1e-9);
  EXPECT_EQ(joint.marginal(1).num_outcomes(), 3);
}

TEST(Naimark, DilationReproducesObservable) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Observable m = random_observable(2 + s % 2, 2 + s % 3, 60 + s);
    const LeastDisturbing ld = naimark_least_disturbing(m);
    const CMatrix& k = ld.naimark.isometry;
    EXPECT_LT((k.adjoint() * k - identity(m.dim())).norm(), 1e-9);
    for (int x = 0; x < m.num_outcomes(); ++x) {
      EXPECT_LT((k.adjoint() * ld.naimark.sharp.effect(x) * k - m.effect(x)).norm(), 1e-9);
    }
  }
}

TEST(Naimark, SharpObservableGivesLudersMap) {
  const Observable m = sharp_from(linalg::pauli_x());
  const Channel ldc = naimark_least_disturbing(m).channel;
  const CMatrix rho = linalg::random_density_matrix(2, 2, 70);
  CMatrix expected = CMatrix::Zero(4, 4);
  for (int x = 0; x < 2; ++x) {
    expected += kron(m.effect(x) * rho * m.effect(x), ket_bra(2, x, x));
  }
  EXPECT_LT((ldc.schrodinger(rho) - expected).norm(), 1e-12);
}

TEST(Naimark, TrivialObservableDisturbsNothing) {
  const Channel ldc = naimark_least_disturbing(Observable({identity(2)})).channel;
  const CMatrix rho = linalg::random_density_matrix(2, 2, 71);
  EXPECT_LT((ldc.schrodinger(rho) - rho).norm(), 1e-12);
}

TEST(Instrument, LeastDisturbingInstrument) {
  const Observable m = random_observable(2, 3, 72);
  const LeastDisturbing ld = naimark_least_disturbing(m);
  const KrausForm k = kraus_from_choi(ld.channel);
  // Blocks I_x(rho) = Mhat(x) K rho K^dag Mhat(x).
  std::vector<CMatrix> blocks;
  for (int x = 0; x < 3; ++x) {
    blocks.push_back(choi_of_operator(ld.naimark.sharp.effect(x) * ld.naimark.isometry));
  }
  const Instrument inst(2, {2, 3}, blocks);
  EXPECT_LT(frobenius_distance(inst.total().choi(), ld.channel.choi()), 1e-12);
  const CMatrix rho = linalg::random_density_matrix(2, 2, 73);
  for (int x = 0; x < 3; ++x) {
    EXPECT_NEAR(inst.apply(x, rho).trace().real(), (rho * m.effect(x)).trace().real(), 1e-12);
  }
}

TEST(Instrument, FromCopyJoint) {
  const Observable m = random_observable(2, 3, 74);
  const Channel joint = concatenate(copying_channel(3, 2), gamma_of_observable(m));
  const Instrument inst = instrument_from_joint(joint, 3);
  const CMatrix rho = linalg::random_density_matrix(2, 2, 75);
  for (int x = 0; x < 3; ++x) {
    const CMatrix expected = (rho * m.effect(x)).trace() * ket_bra(3, x, x);
    EXPECT_LT((inst.apply(x, rho) - expected).norm(), 1e-12);
  }
  const Observable induced = inst.observable();
  for (int x = 0; x < 3; ++x) EXPECT_LT((induced.effect(x) - m.effect(x)).norm(), 1e-12);
}

TEST(Instrument, RoundTripPreservesBlockDiagonalAction) {
  const Observable m = random_observable(2, 2, 76);
  const LeastDisturbing ld = naimark_least_disturbing(m);
  std::vector<CMatrix> blocks;
  for (int x = 0; x < 2; ++x) {
    blocks.push_back(choi_of_operator(ld.naimark.sharp.effect(x) * ld.naimark.isometry));
  }
  const Instrument inst(2, {2, 2}, blocks);
  const Channel joint = joint_from_instrument(inst);
  const Instrument back = instrument_from_joint(joint, 2);
  for (int x = 0; x < 2; ++x) EXPECT_LT((back.blocks()[x] - inst.blocks()[x]).norm(), 1e-12);
}

TEST(Instrument, SingleOutcome) {
  const Channel c = random_channel(2, 2, 2, 77);
  const Instrument inst(2, {2}, {c.choi()});
  const Channel joint = joint_from_instrument(inst);
  EXPECT_EQ(joint.out_dims(), (DimTuple{1, 2}));
  EXPECT_LT(frobenius_distance(joint.choi(), c.choi()), 1e-15);
}

TEST(Instrument, RejectsNonGammaPointer) {
  const Channel id = identity_channel(2);
  EXPECT_THROW(instrument_from_joint(tensor_product(id, id), 2), std::invalid_argument);
}

TEST(PauliChannel, NamedPoints) {
  EXPECT_LT(frobenius_distance(pauli_channel({0, 0, 0}).choi(), identity_channel(2).choi()), 1e-15);
  EXPECT_LT(frobenius_distance(pauli_channel({0.25, 0.25, 0.25}).choi(),
                               constant_channel(identity(2) / 2.0, 2).choi()), 1e-12);
  const CMatrix rho = linalg::random_density_matrix(2, 2, 78);
  const CMatrix x = linalg::pauli_x();
  EXPECT_LT((pauli_channel({1, 0, 0}).schrodinger(rho) - x * rho * x).norm(), 1e-12);
  EXPECT_THROW(pauli_channel({0.6, 0.6, 0}), std::invalid_argument);
  EXPECT_THROW(pauli_channel({-0.1, 0, 0}), std::invalid_argument);
}

TEST(PauliSufficientCondition, FormulaValues) {
  EXPECT_FALSE(pauli_incompatibility_sufficient({0, 0, 0}, {0, 0, 0}));
  EXPECT_TRUE(pauli_incompatibility_sufficient({0, 0.4, 0.4}, {0.4, 0, 0.4}));
  const double t0 = 1.0 / std::sqrt(2.0);
  EXPECT_FALSE(pauli_incompatibility_sufficient({0, 0, (t0 - 1e-6) / 2}, {0, 0, (t0 - 1e-6) / 2}));
  EXPECT_TRUE(pauli_incompatibility_sufficient({0, 0, (t0 + 1e-6) / 2}, {0, 0, (t0 + 1e-6) / 2}));
}

TEST(ConstantChannel, ChoiAndAction) {
  EXPECT_LT(frobenius_distance(constant_channel(ket_bra(2, 0, 0), 2).choi(),
                               kron(identity(2), ket_bra(2, 0, 0))), 1e-15);
  const CMatrix eta = linalg::random_density_matrix(3, 2, 79);
  const CMatrix rho = linalg::random_density_matrix(2, 1, 80);
  EXPECT_LT((constant_channel(eta, 2).schrodinger(rho) - eta).norm(), 1e-12);
  EXPECT_THROW(constant_channel(identity(2), 2), std::invalid_argument);
}

TEST(CopyingChannel, SingleCopyDephases) {
  const CMatrix rho = linalg::random_density_matrix(3, 3, 81);
  const CMatrix out = copying_channel(3, 1).schrodinger(rho);
  EXPECT_LT((out - CMatrix(rho.diagonal().asDiagonal())).norm(), 1e-15);
}

TEST(CopyingChannel, CopiesBasisStates) {
  const CMatrix out = copying_channel(2, 3).schrodinger(ket_bra(2, 0, 0));
  EXPECT_LT((out - ket_bra(8, 0, 0)).norm(), 1e-15);
  EXPECT_EQ(copying_channel(2, 3).out_dims(), (DimTuple{2, 2, 2}));
}

TEST(CopyingChannel, MarginalsAreGamma) {
  const Observable m = random_observable(2, 3, 82);
  const Channel joint = concatenate(copying_channel(3, 2), gamma_of_observable(m));
  for (int k = 0; k < 2; ++k) {
    EXPECT_LT(frobenius_distance(marginal(joint, {k}).choi(), gamma_of_observable(m).choi()), 1e-12);
  }
}

TEST(MeasurePrepare, IsChannel) {
  const Observable f = random_observable(2, 3, 83);
  std::vector<CMatrix> states;
  for (int x = 0; x < 3; ++x) states.push_back(linalg::random_density_matrix(2, 1, 84 + x));
  const Channel c = measure_prepare_channel(f, states);
  const CMatrix rho = linalg::random_density_matrix(2, 2, 90);
  CMatrix expected = CMatrix::Zero(2, 2);
  for (int x = 0; x < 3; ++x) expected += (rho * f.effect(x)).trace() * states[x];
  EXPECT_LT((c.schrodinger(rho) - expected).norm(), 1e-12);
}

TEST(RandomChannel, IsometryHasRankOneChoi) {
  const Channel c = random_channel(2, 3, 1, 91);
  const RVector ev = linalg::eigvalsh(c.choi());
  EXPECT_NEAR(ev(1), 0.0, 1e-10);
}

TEST(RandomChannel, ManySamplesAreValid) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Channel c = random_channel(3, 3, 1 + s % 4, 1000 + s);
    EXPECT_FALSE(Channel::check(3, {3}, c.choi(), 1e-9).has_value());
  }
}

TEST(RandomChannel, FullEnvironmentGivesFullRank) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Channel c = random_channel(2, 2, 4, 2000 + s);
    EXPECT_GT(linalg::min_eigenvalue(c.choi()), 1e-6);
  }
}

TEST(RandomChannel, Deterministic) {
  EXPECT_EQ(random_channel(2, 3, 2, 5).choi(), random_channel(2, 3, 2, 5).choi());
}

TEST(Marginal, OfTensorProduct) {
  const Channel a = random_channel(2, 2, 2, 92);
  const Channel joint = tensor_product(a, identity_channel(1));
  EXPECT_LT(frobenius_distance(marginal(joint, {0}).choi(), a.choi()), 1e-12);
}

TEST(PermuteOutputs, SwapsMarginals) {
  const Observable m = random_observable(2, 2, 93);
  const Channel ldc = naimark_least_disturbing(m).channel;  // outputs (2, 2)
  const Channel swapped = permute_outputs(ldc, {1, 0});
  EXPECT_LT(frobenius_distance(marginal(swapped, {0}).choi(), marginal(ldc, {1}).choi()), 1e-12);
}

TEST(FromApproximateChoi, RepairsSmallErrors) {
  const Channel c = random_channel(2, 2, 2, 94);
  CMatrix noisy = c.choi();
  noisy(0, 0) += 1e-8;
  noisy(1, 2) += cplx(1e-9, 1e-9);
  const Channel fixed = Channel::from_approximate_choi(2, {2}, noisy);
  EXPECT_LT(frobenius_distance(fixed.choi(), c.choi()), 1e-7);
}

}  // namespace
}  // namespace qcompat
