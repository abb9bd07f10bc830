#include <gtest/gtest.h>

#include <cmath>

#include "dense_oracle.hpp"
#include "lgst/design.hpp"
#include "lgst/errors.hpp"
#include "lgst/propagation.hpp"
#include "test_util.hpp"

using lgst::GeneratorKind;
using lgst::PauliString;

namespace {

lgst::ErrorModel model_with(std::size_t n, std::vector<lgst::GateErrorSpec> gates) {
  return lgst::ErrorModel::create(n, std::move(gates));
}

}  // namespace

TEST(Propagation, DepthZeroIsIdentity) {
  const auto gm = lgst::build_paper_model(3, lgst::ring_edges(3), 1);
  const auto pc = lgst::propagate_all(lgst::Circuit(3, {}), gm.model);
  ASSERT_EQ(pc.generators.size(), 6u);
  for (const auto& g : pc.generators) {
    EXPECT_EQ(g.label_out, gm.model.parameter(g.source_param).label);
    EXPECT_EQ(g.sign, 1);
  }
}

TEST(Propagation, HadamardMovesPrepZToX) {
  const auto m = model_with(1, {{"prep", "prep", {}, {{GeneratorKind::H, PauliString::from_string("Z")}}},
                                {"h_0", "h", {0}, {}}});
  const lgst::Circuit c(1, {{{"h", {0}}}});
  const auto pc = lgst::propagate_all(c, m);
  ASSERT_EQ(pc.generators.size(), 1u);
  EXPECT_EQ(pc.generators[0].label_out.str(), "+X");
  const auto dense = oracle::matrix_to_pauli(
      oracle::circuit_unitary(c) * oracle::pauli_matrix(PauliString::from_string("Z")) *
          oracle::circuit_unitary(c).adjoint(),
      1);
  EXPECT_EQ(pc.generators[0].sign, dense.sign());
}

TEST(Propagation, RandomCircuitMatchesDenseConjugation) {
  lgst::Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = testutil::random_full_model(3, rng);
    const auto c = testutil::random_clifford_circuit(3, 5, rng);
    const auto pc = lgst::propagate_all(c, m);
    // suffix[l] = unitary of layers l+1..depth (1-based layers; prep = 0).
    std::vector<oracle::Mat> suffix(c.depth() + 2, oracle::Mat::Identity(8, 8));
    for (std::size_t l = c.depth(); l-- > 0;) {
      suffix[l] = suffix[l + 1] * oracle::layer_unitary(c.layers()[l], 3);
    }
    for (const auto& g : pc.generators) {
      const auto& p = m.parameter(g.source_param).label;
      const oracle::Mat& u = suffix[std::min(g.layer, c.depth())];
      const auto img = oracle::matrix_to_pauli(u * oracle::pauli_matrix(p) * u.adjoint(), 3);
      EXPECT_TRUE(img.same_letters(g.label_out));
      if (g.kind == GeneratorKind::H) EXPECT_EQ(img.sign(), g.sign);
      if (g.kind == GeneratorKind::S) EXPECT_EQ(g.sign, 1);
    }
  }
}

TEST(Propagation, SuffixTableauIsProductOfLayers) {
  lgst::Rng rng(42);
  const auto c = testutil::random_clifford_circuit(4, 7, rng);
  lgst::CliffordTableau u(4);
  for (const auto& t : lgst::layer_tableaus(c)) u = lgst::compose(t, u);
  const auto m = testutil::random_full_model(4, rng, 1);
  EXPECT_EQ(lgst::propagate_all(c, m).unitary, u);
}

TEST(Propagation, TraceKernels) {
  lgst::StabilizerState zero(1);
  // Kernel check before the Z-type restriction: Tr[X H_Y(|0><0|)] = -i<0|[X,Y]|0> = 2.
  EXPECT_EQ(lgst::h_trace(PauliString::from_string("X"), PauliString::from_string("Y"), zero), 2.0);
  EXPECT_EQ(lgst::h_trace(PauliString::from_string("Z"), PauliString::from_string("Z"), zero), 0.0);
  EXPECT_EQ(lgst::s_trace(PauliString::from_string("Z"), PauliString::from_string("X"), zero), -2.0);
  EXPECT_EQ(lgst::s_trace(PauliString::from_string("Z"), PauliString::from_string("Z"), zero), 0.0);

  const std::size_t t[] = {0};
  const auto plus = lgst::apply_layer(zero, lgst::CliffordTableau::gate("h", 1, t));
  const oracle::Mat rho = [] {
    oracle::Vec v(2);
    v << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
    return oracle::Mat(v * v.adjoint());
  }();
  const auto z = oracle::pauli_matrix(PauliString::from_string("Z"));
  const auto x = oracle::pauli_matrix(PauliString::from_string("X"));
  const std::complex<double> i(0, 1);
  const double dense = (z * (-i) * (x * rho - rho * x)).trace().real();
  EXPECT_NEAR(lgst::h_trace(PauliString::from_string("Z"), PauliString::from_string("X"), plus), dense, 1e-12);
}

TEST(Propagation, TracesMatchDense) {
  lgst::Rng rng(43);
  const std::complex<double> i(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = testutil::random_clifford_circuit(3, 4, rng);
    const auto psi_state = lgst::StabilizerState::from_unitary(lgst::circuit_tableau(c));
    const oracle::Vec psi = oracle::circuit_unitary(c) * oracle::zero_state(3);
    const oracle::Mat rho = psi * psi.adjoint();
    PauliString q(3);
    for (std::size_t k = 0; k < 3; ++k) {
      if (lgst::bernoulli(rng, 0.5)) q.set_op(k, 'Z');
    }
    const auto p = testutil::random_pauli(3, rng);
    const auto mq = oracle::pauli_matrix(q), mp = oracle::pauli_matrix(p);
    const double h = (mq * (-i) * (mp * rho - rho * mp)).trace().real();
    const double s = (mq * (mp * rho * mp - rho)).trace().real();
    EXPECT_NEAR(lgst::h_trace(q, p, psi_state), h, 1e-12);
    EXPECT_NEAR(lgst::s_trace(q, p, psi_state), s, 1e-12);
  }
}

TEST(Propagation, RowExamples) {
  const auto m = model_with(1, {{"prep", "prep", {}, {{GeneratorKind::S, PauliString::from_string("X")}}},
                                {"h_0", "h", {0}, {{GeneratorKind::S, PauliString::from_string("Y")}}}});
  const auto row = lgst::sensitivity_row(lgst::Circuit(1, {}), PauliString::from_string("Z"), m);
  EXPECT_EQ(row.row_kind, GeneratorKind::S);
  ASSERT_EQ(row.entries.size(), 1u);
  EXPECT_EQ(row.entries[0].first, *m.parameter_index("prep", GeneratorKind::S, PauliString::from_string("X")));
  EXPECT_EQ(row.entries[0].second, -2.0);

  const auto row_h = lgst::sensitivity_row(lgst::Circuit(1, {{{"h", {0}}}}), PauliString::from_string("Z"), m);
  EXPECT_EQ(row_h.row_kind, GeneratorKind::H);
  EXPECT_EQ(row_h.ideal, 0);
  EXPECT_TRUE(row_h.entries.empty());
}

TEST(Propagation, RejectsBadObservables) {
  const auto gm = lgst::build_paper_model(2, lgst::ring_edges(2), 1);
  const lgst::Circuit c(2, {});
  EXPECT_THROW(lgst::sensitivity_row(c, PauliString::from_string("II"), gm.model), lgst::DesignError);
  EXPECT_THROW(lgst::sensitivity_row(c, PauliString::from_string("XI"), gm.model), lgst::DesignError);
  EXPECT_THROW(lgst::sensitivity_row(c, PauliString::from_string("ZZZ"), gm.model), lgst::DimensionError);
}

TEST(Propagation, UnknownGateIsModelError) {
  const auto gm = lgst::build_paper_model(2, lgst::ring_edges(2), 1);
  const lgst::Circuit c(2, {{{"h", {0}}}});
  EXPECT_THROW(lgst::propagate_all(c, gm.model), lgst::ModelError);
}

TEST(Propagation, RowsMatchStabilizerTraces) {
  // Fast pulled-back evaluation vs. the h_trace/s_trace definition on U|0>.
  lgst::Rng rng(44);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + trial % 4;
    const auto m = testutil::random_full_model(n, rng, 3);
    const auto c = testutil::random_clifford_circuit(n, 6, rng);
    const auto pc = lgst::propagate_all(c, m);
    std::vector<double> scratch(m.num_parameters(), 0.0);
    for (const auto& q : lgst::enumerate_observables(n, 2)) {
      const auto row = lgst::sensitivity_row(pc, q, scratch);
      std::vector<double> expect(m.num_parameters(), 0.0);
      for (const auto& g : pc.generators) {
        expect[g.source_param] += g.kind == GeneratorKind::H
                                      ? g.sign * lgst::h_trace(q, g.label_out, pc.state)
                                      : lgst::s_trace(q, g.label_out, pc.state);
      }
      std::vector<double> got(m.num_parameters(), 0.0);
      for (auto [i, v] : row.entries) got[i] = v;
      EXPECT_EQ(got, expect);
      bool has_h = false, has_s = false;
      for (auto [i, v] : row.entries) {
        (m.kind(i) == GeneratorKind::H ? has_h : has_s) = true;
        EXPECT_EQ(std::fmod(v, 2.0), 0.0);
        EXPECT_EQ(m.kind(i), row.row_kind);
      }
      EXPECT_FALSE(has_h && has_s);
    }
  }
}

TEST(Propagation, RowsMatchFiniteDifferences) {
  lgst::Rng rng(45);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = 1 + trial % 3;
    const auto m = testutil::random_full_model(n, rng, 1);
    const auto c = testutil::random_clifford_circuit(n, 3, rng);
    const auto obs = lgst::enumerate_observables(n, std::min<std::size_t>(n, 2));
    const auto fd = oracle::finite_difference_rows(c, m, obs);
    for (std::size_t k = 0; k < obs.size(); ++k) {
      const auto row = lgst::sensitivity_row(c, obs[k], m);
      std::vector<double> got(m.num_parameters(), 0.0);
      for (auto [i, v] : row.entries) got[i] = v;
      for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], fd[k][i], 1e-6);
    }
  }
}
