#include <gtest/gtest.h>

#include <cmath>

#include "dense_oracle.hpp"
#include "lgst/design.hpp"
#include "lgst/errors.hpp"
#include "lgst/propagation.hpp"
#include "lgst/simulator.hpp"
#include "test_util.hpp"

using lgst::GeneratorKind;
using lgst::PauliString;

namespace {

lgst::RateVector random_rates(const lgst::ErrorModel& m, lgst::Rng& rng, double h_scale,
                              double s_scale) {
  auto r = lgst::RateVector::zeros(m);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] = m.kind(i) == GeneratorKind::H ? lgst::uniform(rng, -h_scale, h_scale)
                                         : lgst::uniform(rng, 0.0, s_scale);
  }
  return r;
}

std::vector<PauliString> all_z_observables(std::size_t n) {
  return lgst::enumerate_observables(n, n);
}

lgst::Circuit paper_circuit(std::size_t n, std::size_t depth, std::uint64_t seed) {
  lgst::Rng rng(seed);
  return lgst::sample_random_circuit(n, depth, lgst::ring_edges(n), {}, rng);
}

}  // namespace

TEST(Simulator, ZeroRatesGiveIdealValues) {
  lgst::Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = testutil::random_full_model(3, rng);
    const auto c = testutil::random_clifford_circuit(3, 6, rng);
    const auto obs = all_z_observables(3);
    const auto zero = lgst::RateVector::zeros(m);
    const auto dense = lgst::simulate_dense(c, m, zero, obs);
    for (int k : {1, 2, 3}) {
      const auto taylor = lgst::simulate_taylor(c, m, zero, obs, k);
      for (std::size_t i = 0; i < obs.size(); ++i) {
        const double ideal = lgst::sensitivity_row(c, obs[i], m).ideal;
        EXPECT_EQ(dense[i], ideal);
        EXPECT_EQ(taylor[i], ideal);
      }
    }
  }
}

TEST(Simulator, SingleQubitPrepDepolarizationClosedForm) {
  const auto m = lgst::ErrorModel::create(
      1, {{"prep", "prep", {}, {{GeneratorKind::S, PauliString::from_string("X")}}}});
  const std::vector<PauliString> z = {PauliString::from_string("Z")};
  for (double s : {1e-4, 1e-3, 1e-2, 0.1}) {
    auto r = lgst::RateVector::zeros(m);
    r[0] = s;
    const lgst::Circuit c(1, {});
    EXPECT_NEAR(lgst::simulate_dense(c, m, r, z)[0], std::exp(-2 * s), 1e-14);
    for (int k = 1; k <= 4; ++k) {
      double series = 0.0, term = 1.0;
      for (int j = 0; j <= k; ++j) {
        series += term;
        term *= -2 * s / (j + 1);
      }
      EXPECT_NEAR(lgst::simulate_taylor(c, m, r, z, k)[0], series, 1e-15);
    }
  }
}

TEST(Simulator, DenseMatchesDensityMatrixOracle) {
  lgst::Rng rng(2);
  for (std::size_t n = 1; n <= 3; ++n) {
    for (int trial = 0; trial < 8; ++trial) {
      const auto m = testutil::random_full_model(n, rng, 3);
      const auto c = testutil::random_clifford_circuit(n, 5, rng);
      const auto r = random_rates(m, rng, 0.05, 0.02);
      const auto obs = all_z_observables(n);
      const auto got = lgst::simulate_dense(c, m, r, obs);
      const auto want = oracle::noisy_expectations(c, m, r.values, obs);
      for (std::size_t i = 0; i < obs.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-11);
    }
  }
}

TEST(Simulator, DenseMatchesOracleOnPaperModel) {
  const auto gm = lgst::build_paper_model(3, lgst::ring_edges(3), 4, 10.0);
  const auto obs = all_z_observables(3);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto c = paper_circuit(3, 8, seed);
    const auto got = lgst::simulate_dense(c, gm.model, gm.rates, obs);
    const auto want = oracle::noisy_expectations(c, gm.model, gm.rates.values, obs);
    for (std::size_t i = 0; i < obs.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-11);
  }
}

TEST(Simulator, DenseRefusesLargeRegisters) {
  const auto gm = lgst::build_paper_model(6, lgst::ring_edges(6), 1);
  const auto obs = lgst::enumerate_observables(6, 1);
  EXPECT_THROW(lgst::simulate_dense(paper_circuit(6, 2, 1), gm.model, gm.rates, obs, 5),
               lgst::BackendError);
  EXPECT_NO_THROW(lgst::simulate_dense(paper_circuit(6, 2, 1), gm.model, gm.rates, obs, 6));
}

TEST(Simulator, FirstOrderTaylorIsTheLinearModel) {
  lgst::Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = testutil::random_full_model(4, rng, 3);
    const auto c = testutil::random_clifford_circuit(4, 6, rng);
    const auto r = random_rates(m, rng, 0.01, 0.01);
    const auto obs = lgst::enumerate_observables(4, 2);
    const auto got = lgst::simulate_taylor(c, m, r, obs, 1);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const auto row = lgst::sensitivity_row(c, obs[i], m);
      double want = row.ideal;
      for (const auto& [j, v] : row.entries) want += v * r[j];
      EXPECT_NEAR(got[i], want, 1e-12);
    }
  }
}

TEST(Simulator, TaylorConvergesToDense) {
  lgst::Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = testutil::random_full_model(3, rng, 2);
    const auto c = testutil::random_clifford_circuit(3, 6, rng);
    const auto r = random_rates(m, rng, 1e-2, 1e-3);
    const auto obs = all_z_observables(3);
    const auto exact = lgst::simulate_dense(c, m, r, obs);
    double prev = 1.0;
    for (int k = 1; k <= 5; ++k) {
      const auto approx = lgst::simulate_taylor(c, m, r, obs, k);
      double err = 0.0;
      for (std::size_t i = 0; i < obs.size(); ++i) err = std::max(err, std::abs(approx[i] - exact[i]));
      if (prev > 1e-13) EXPECT_LT(err, 0.2 * prev) << "order " << k;
      prev = err;
    }
    EXPECT_LT(prev, 1e-8);
  }
}

TEST(Simulator, TaylorMatchesDenseOnPaperModel) {
  const auto gm = lgst::build_paper_model(5, lgst::ring_edges(5), 9);
  const auto obs = lgst::enumerate_observables(5, 2);
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    const auto c = paper_circuit(5, 10, seed);
    const auto exact = lgst::simulate_dense(c, gm.model, gm.rates, obs);
    std::vector<double> err;
    for (int k = 1; k <= 5; ++k) {
      const auto approx = lgst::simulate_taylor(c, gm.model, gm.rates, obs, k);
      double e = 0.0;
      for (std::size_t i = 0; i < obs.size(); ++i) e = std::max(e, std::abs(approx[i] - exact[i]));
      err.push_back(e);
    }
    for (std::size_t k = 1; k < err.size(); ++k) EXPECT_LT(err[k], 0.3 * err[k - 1]) << "order " << k + 1;
    EXPECT_LT(err.back(), 1e-6);
  }
}

TEST(Simulator, TaylorRejectsBadOrder) {
  const auto gm = lgst::build_paper_model(2, lgst::ring_edges(2), 1);
  const auto obs = lgst::enumerate_observables(2, 1);
  EXPECT_THROW(lgst::simulate_taylor(paper_circuit(2, 3, 1), gm.model, gm.rates, obs, 0),
               lgst::Error);
}

TEST(Simulator, SampledExpectationsHaveBinomialSpread) {
  const std::vector<double> z = {1.0, 0.6};  // one qubit, <Z> = 0.6
  const std::uint64_t shots = 400;
  lgst::Rng rng(5);
  const int reps = 4000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < reps; ++i) {
    const auto e = lgst::sample_z_expectations(z, shots, rng);
    EXPECT_EQ(e[0], 1.0);
    sum += e[1];
    sum2 += e[1] * e[1];
  }
  const double mean = sum / reps;
  const double sd = std::sqrt(sum2 / reps - mean * mean);
  const double want = std::sqrt((1 - 0.36) / shots);
  EXPECT_NEAR(mean, 0.6, 4 * want / std::sqrt(double(reps)));
  EXPECT_NEAR(sd / want, 1.0, 0.05);
}

TEST(Simulator, GaussianShotNoiseSpread) {
  const std::vector<double> exact(20000, 0.8);
  const auto noisy = lgst::add_gaussian_shot_noise(exact, 10, 1000, 6);
  double sum = 0, sum2 = 0;
  for (double v : noisy) {
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / double(noisy.size());
  const double sd = std::sqrt(sum2 / double(noisy.size()) - mean * mean);
  EXPECT_NEAR(sd / std::sqrt(0.36 / 1000), 1.0, 0.05);
  const auto again = lgst::add_gaussian_shot_noise(exact, 10, 1000, 6);
  EXPECT_EQ(noisy, again);
}

TEST(Simulator, DesignSimulationIsDeterministic) {
  const auto gm = lgst::build_paper_model(1, {}, 3);
  const auto design = lgst::generate_design(1, 5, 6, 1, {}, {}, 3);
  for (auto backend : {lgst::Backend::dense, lgst::Backend::taylor}) {
    lgst::SimulatorConfig cfg;
    cfg.backend = backend;
    cfg.shots = 100;
    cfg.seed = 42;
    const auto a = lgst::simulate_design(design, gm.model, gm.rates, cfg);
    const auto b = lgst::simulate_design(design, gm.model, gm.rates, cfg);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.value.size(), 6u);
    cfg.seed = 43;
    const auto c = lgst::simulate_design(design, gm.model, gm.rates, cfg);
    EXPECT_NE(a.value, c.value);
    EXPECT_TRUE(a.meta.contains("model_ref"));
  }
}

TEST(Simulator, DesignSimulationInfiniteShotsAgreesWithDirectCalls) {
  const auto gm = lgst::build_paper_model(4, lgst::ring_edges(4), 5);
  const auto design = lgst::generate_design(4, 6, 5, 2, lgst::ring_edges(4), {}, 2);
  lgst::SimulatorConfig cfg;
  cfg.backend = lgst::Backend::dense;
  const auto data = lgst::simulate_design(design, gm.model, gm.rates, cfg);
  ASSERT_EQ(data.value.size(), design.num_rows());
  for (std::size_t c = 0; c < design.circuits.size(); ++c) {
    const auto direct = lgst::simulate_dense(design.circuits[c], gm.model, gm.rates, design.observables);
    for (std::size_t k = 0; k < design.observables.size(); ++k) {
      EXPECT_EQ(data.value[c * design.observables.size() + k], direct[k]);
    }
  }
}
