#include <gtest/gtest.h>

#include "dense_oracle.hpp"
#include "lgst/clifford.hpp"
#include "lgst/errors.hpp"
#include "lgst/propagation.hpp"
#include "test_util.hpp"

using lgst::CliffordTableau;
using lgst::PauliString;

namespace {

// U p U^dag read back from dense matrices.
PauliString dense_conjugate(const oracle::Mat& u, const PauliString& p) {
  return oracle::matrix_to_pauli(u * oracle::pauli_matrix(p) * u.adjoint(), p.num_qubits());
}

}  // namespace

TEST(Clifford, TextbookImages) {
  const std::size_t t0[] = {0};
  const auto h = CliffordTableau::gate("h", 1, t0);
  EXPECT_EQ(h.conjugate(PauliString::from_string("X")).str(), "+Z");
  const auto z90 = CliffordTableau::gate("z90", 1, t0);
  const auto img = z90.conjugate(PauliString::from_string("X"));
  EXPECT_EQ(img, dense_conjugate(oracle::gate_unitary("z90", 1, t0), PauliString::from_string("X")));
  EXPECT_TRUE(img.same_letters(PauliString::from_string("Y")));
  const std::size_t t01[] = {0, 1};
  const auto cz = CliffordTableau::gate("cz", 2, t01);
  EXPECT_EQ(cz.conjugate(PauliString::from_string("XI")).str(), "+XZ");
}

TEST(Clifford, EveryGateMatchesDense) {
  for (std::string name : {"idle", "x", "y", "z", "h", "s", "sdg", "x90", "y90", "z90", "cz", "cx"}) {
    const int arity = lgst::gate_arity(name);
    ASSERT_GT(arity, 0) << name;
    const std::size_t n = 3;
    std::vector<std::vector<std::size_t>> placements =
        arity == 1 ? std::vector<std::vector<std::size_t>>{{0}, {1}, {2}}
                   : std::vector<std::vector<std::size_t>>{{0, 1}, {1, 0}, {2, 0}, {1, 2}};
    for (const auto& t : placements) {
      const auto tab = CliffordTableau::gate(name, n, t);
      const auto u = oracle::gate_unitary(name, n, t);
      for (std::size_t q = 0; q < n; ++q) {
        for (char op : {'X', 'Y', 'Z'}) {
          const auto p = PauliString::single(n, q, op);
          EXPECT_EQ(tab.conjugate(p), dense_conjugate(u, p)) << name << " on " << p.str();
        }
      }
    }
  }
}

TEST(Clifford, CompositionMatchesDense) {
  lgst::Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 3;
    const auto a = testutil::random_clifford_circuit(n, 3, rng);
    const auto b = testutil::random_clifford_circuit(n, 3, rng);
    const auto ta = lgst::circuit_tableau(a), tb = lgst::circuit_tableau(b);
    const auto ua = oracle::circuit_unitary(a), ub = oracle::circuit_unitary(b);
    const auto composed = lgst::compose(ta, tb);
    for (int k = 0; k < 5; ++k) {
      const auto p = testutil::random_hermitian(n, rng);
      EXPECT_EQ(composed.conjugate(p), dense_conjugate(ua * ub, p));
      EXPECT_EQ(composed.conjugate(p), ta.conjugate(tb.conjugate(p)));
    }
  }
}

TEST(Clifford, InverseAndIdentity) {
  lgst::Rng rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = testutil::random_clifford_circuit(4, 6, rng);
    const auto t = lgst::circuit_tableau(c);
    EXPECT_TRUE(lgst::compose(t, t.inverse()).is_identity());
    EXPECT_TRUE(lgst::compose(t.inverse(), t).is_identity());
  }
}

TEST(Clifford, ConjugationPreservesCommutation) {
  lgst::Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = lgst::circuit_tableau(testutil::random_clifford_circuit(6, 5, rng));
    const auto a = testutil::random_pauli(6, rng), b = testutil::random_pauli(6, rng);
    EXPECT_EQ(lgst::commutes(a, b), lgst::commutes(t.conjugate(a), t.conjugate(b)));
  }
}

TEST(Clifford, SingleQubitGatesPreserveWeight) {
  lgst::Rng rng(24);
  for (std::string name : {"h", "s", "x90", "y90", "z90"}) {
    for (std::size_t q = 0; q < 4; ++q) {
      const std::size_t t[] = {q};
      const auto tab = CliffordTableau::gate(name, 4, t);
      for (int k = 0; k < 10; ++k) {
        const auto p = testutil::random_pauli(4, rng);
        EXPECT_EQ(tab.conjugate(p).weight(), p.weight());
      }
    }
  }
}

TEST(Clifford, FromImagesValidates) {
  using V = std::vector<PauliString>;
  EXPECT_NO_THROW(CliffordTableau::from_images(V{PauliString::from_string("Z")},
                                               V{PauliString::from_string("X")}));
  EXPECT_THROW(CliffordTableau::from_images(V{PauliString::from_string("Z")},
                                            V{PauliString::from_string("Z")}),
               lgst::Error);
  EXPECT_THROW(CliffordTableau::from_images(V{PauliString::from_string("iZ")},
                                            V{PauliString::from_string("X")}),
               lgst::Error);
}

TEST(Clifford, DimensionMismatch) {
  EXPECT_THROW(CliffordTableau(2).conjugate(PauliString(3)), lgst::DimensionError);
}
