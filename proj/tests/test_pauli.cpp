#include <gtest/gtest.h>

#include "dense_oracle.hpp"
#include "lgst/errors.hpp"
#include "lgst/pauli.hpp"
#include "test_util.hpp"

using lgst::PauliString;

TEST(Pauli, ParseAndPrint) {
  const auto p = PauliString::from_string("-XIZY");
  EXPECT_EQ(p.num_qubits(), 4u);
  EXPECT_EQ(p.phase(), 2);
  EXPECT_EQ(p.op(0), 'X');
  EXPECT_EQ(p.op(3), 'Y');
  EXPECT_EQ(p.str(), "-XIZY");
  EXPECT_EQ(p.label(), "XIZY");
  EXPECT_EQ(PauliString::from_string("iX").str(), "+iX");
  EXPECT_EQ(PauliString::from_string("-iY").phase(), 3);
  EXPECT_EQ(p.weight(), 3u);
  EXPECT_EQ(PauliString(5).weight(), 0u);
  EXPECT_THROW(PauliString::from_string("XQ"), lgst::Error);
}

TEST(Pauli, SingleQubitProducts) {
  const auto x = PauliString::from_string("X");
  const auto y = PauliString::from_string("Y");
  const auto z = PauliString::from_string("Z");
  const auto xz = lgst::pauli_mul(x, z);
  EXPECT_TRUE(xz.same_letters(y));
  EXPECT_EQ(xz.phase(), 3);  // XZ = -iY
  EXPECT_EQ(lgst::pauli_mul(z, x).phase(), 1);
  for (const auto& p : {x, y, z}) {
    const auto pp = p * p;
    EXPECT_TRUE(pp.is_identity());
    EXPECT_EQ(pp.phase(), 0);
  }
}

TEST(Pauli, TwoQubitProductMatchesDense) {
  const auto a = PauliString::from_string("XZ");
  const auto b = PauliString::from_string("ZX");
  const auto ab = a * b;
  EXPECT_TRUE(oracle::pauli_matrix(ab).isApprox(oracle::pauli_matrix(a) * oracle::pauli_matrix(b)));
}

TEST(Pauli, RandomProductsMatchDense) {
  lgst::Rng rng(11);
  for (int trial = 0; trial < 600; ++trial) {
    const std::size_t n = 1 + trial % 3;
    const auto a = testutil::random_pauli(n, rng, true);
    const auto b = testutil::random_pauli(n, rng, true);
    const auto dense = (oracle::pauli_matrix(a) * oracle::pauli_matrix(b)).eval();
    EXPECT_TRUE(oracle::pauli_matrix(a * b).isApprox(dense, 1e-12)) << a.str() << " * " << b.str();
    EXPECT_EQ(lgst::product_phase_unchecked(a, b), (a * b).phase());
  }
}

TEST(Pauli, ProductIsAssociative) {
  lgst::Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + trial % 70;
    const auto a = testutil::random_pauli(n, rng, true);
    const auto b = testutil::random_pauli(n, rng, true);
    const auto c = testutil::random_pauli(n, rng, true);
    EXPECT_EQ((a * b) * c, a * (b * c));
  }
}

TEST(Pauli, CommutationMatchesDense) {
  EXPECT_FALSE(lgst::commutes(PauliString::from_string("X"), PauliString::from_string("Z")));
  EXPECT_TRUE(lgst::commutes(PauliString::from_string("XX"), PauliString::from_string("ZZ")));
  lgst::Rng rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = testutil::random_pauli(3, rng);
    const auto b = testutil::random_pauli(3, rng);
    const auto ma = oracle::pauli_matrix(a), mb = oracle::pauli_matrix(b);
    const bool dense = (ma * mb - mb * ma).norm() < 1e-12;
    EXPECT_EQ(lgst::commutes(a, b), dense);
  }
}

TEST(Pauli, SizeMismatchIsDimensionError) {
  EXPECT_THROW(lgst::pauli_mul(PauliString(2), PauliString(3)), lgst::DimensionError);
  EXPECT_THROW(lgst::commutes(PauliString(2), PauliString(3)), lgst::DimensionError);
}

TEST(Pauli, SignRequiresHermitian) {
  EXPECT_EQ(PauliString::from_string("-Z").sign(), -1);
  EXPECT_THROW(PauliString::from_string("iZ").sign(), lgst::PhaseError);
}

TEST(Pauli, CanonicalOrder) {
  std::vector<PauliString> v = {PauliString::from_string("ZI"), PauliString::from_string("IZ"),
                                PauliString::from_string("XY"), PauliString::from_string("YI"),
                                PauliString::from_string("II")};
  std::sort(v.begin(), v.end());
  std::vector<std::string> got;
  for (const auto& p : v) got.push_back(p.label());
  EXPECT_EQ(got, (std::vector<std::string>{"II", "IZ", "XY", "YI", "ZI"}));
}

TEST(Pauli, WideStrings) {
  lgst::Rng rng(14);
  const auto a = testutil::random_pauli(130, rng);
  const auto b = testutil::random_pauli(130, rng);
  // Brute-force phase and commutation qubit by qubit.
  int anti = 0;
  for (std::size_t q = 0; q < 130; ++q) {
    const char x = a.op(q), y = b.op(q);
    if (x != 'I' && y != 'I' && x != y) ++anti;
  }
  EXPECT_EQ(lgst::commutes(a, b), anti % 2 == 0);
  EXPECT_EQ(PauliString::from_string(a.str()), a);
}
