#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "lgst/design.hpp"
#include "lgst/random.hpp"
#include "lgst/simulator.hpp"
#include "lgst/solver.hpp"

using lgst::GeneratorKind;

namespace {

// A design matrix built directly from a dense block; rows are stochastic when ideal != 0.
lgst::DesignMatrix make_design(const Eigen::MatrixXd& a, std::vector<std::int8_t> ideal,
                               std::vector<GeneratorKind> kinds) {
  lgst::DesignMatrix d;
  d.matrix = a.sparseView();
  d.matrix.makeCompressed();
  d.ideal = std::move(ideal);
  d.column_kind = std::move(kinds);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    d.circuit_index.push_back(static_cast<std::uint32_t>(r));
    d.observable_index.push_back(0);
  }
  return d;
}

struct Problem {
  lgst::GeneratedModel gm;
  lgst::ExperimentDesign design;
  lgst::DesignMatrix d;
};

Problem full_rank_problem(std::size_t n, std::uint64_t seed, std::size_t extra_factor = 1) {
  Problem p{lgst::build_paper_model(n, lgst::ring_edges(n), seed), {}, {}};
  auto start = lgst::generate_design(n, 10, 0, 2, lgst::ring_edges(n), {}, seed);
  auto grown = lgst::grow_until_full_rank(p.gm.model, start, 10, 2000);
  EXPECT_TRUE(grown.full_rank);
  p.design = grown.design;
  lgst::extend_design(p.design, p.design.circuits.size() * extra_factor);
  p.d = lgst::build_design(p.design, p.gm.model);
  return p;
}

Eigen::VectorXd as_vector(const lgst::RateVector& r) {
  return Eigen::Map<const Eigen::VectorXd>(r.values.data(), static_cast<Eigen::Index>(r.size()));
}

// Best nonnegative least-squares solution by trying every passive set.
Eigen::VectorXd nnls_by_enumeration(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  const auto m = a.cols();
  Eigen::VectorXd best = Eigen::VectorXd::Zero(m);
  double best_res = y.squaredNorm();
  for (int mask = 1; mask < (1 << m); ++mask) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < m; ++j)
      if (mask >> j & 1) cols.push_back(j);
    Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = a.col(cols[k]);
    const Eigen::VectorXd z = sub.colPivHouseholderQr().solve(y);
    if ((z.array() < 0).any()) continue;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
    for (std::size_t k = 0; k < cols.size(); ++k) x[cols[k]] = z[static_cast<Eigen::Index>(k)];
    const double res = (a * x - y).squaredNorm();
    if (res < best_res) {
      best_res = res;
      best = x;
    }
  }
  return best;
}

}  // namespace

TEST(Solver, ExactRecoveryFromLinearData) {
  auto p = full_rank_problem(4, 3);
  const Eigen::VectorXd truth = as_vector(p.gm.rates);
  const Eigen::VectorXd y = p.d.matrix * truth;
  for (auto route : {lgst::SolveRoute::qr, lgst::SolveRoute::normal}) {
    lgst::FitOptions opts;
    opts.route = route;
    const auto fit = lgst::fit_rates(p.d, y, opts);
    EXPECT_TRUE(fit.converged());
    EXPECT_LT((fit.rates - truth).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(fit.hamiltonian.null_space_dim, 0u);
  }
}

TEST(Solver, ZeroDataGivesPositiveZeroRates) {
  auto p = full_rank_problem(3, 1);
  const auto fit = lgst::fit_rates(p.d, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.d.rows())));
  for (Eigen::Index i = 0; i < fit.rates.size(); ++i) {
    EXPECT_EQ(fit.rates[i], 0.0);
    if (p.d.column_kind[static_cast<std::size_t>(i)] == GeneratorKind::S)
      EXPECT_FALSE(std::signbit(fit.rates[i]));
  }
}

TEST(Solver, AllZeroHamiltonianBlock) {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Zero(5, 3);
  lgst::SparseRowMatrix s = a.sparseView();
  const auto fit = lgst::solve_hamiltonian(s, Eigen::VectorXd::Ones(5));
  EXPECT_EQ(fit.rank, 0u);
  EXPECT_EQ(fit.null_space_dim, 3u);
  EXPECT_EQ(fit.x.norm(), 0.0);
}

TEST(Solver, MinimumNormOnRankDeficientBlock) {
  Eigen::MatrixXd a(3, 2);
  a << 2, 2, -2, -2, 4, 4;
  lgst::SparseRowMatrix s = a.sparseView();
  const Eigen::VectorXd y = a * Eigen::Vector2d(0.3, 0.1);
  const auto fit = lgst::solve_hamiltonian(s, y);
  EXPECT_EQ(fit.rank, 1u);
  EXPECT_NEAR(fit.x[0], 0.2, 1e-14);
  EXPECT_NEAR(fit.x[1], 0.2, 1e-14);
  const auto alt = lgst::solve_hamiltonian_normal(lgst::normal_equations(s, y));
  EXPECT_NEAR(alt.x[0], 0.2, 1e-12);
  EXPECT_NEAR(alt.x[1], 0.2, 1e-12);
}

TEST(Solver, NnlsMatchesExhaustiveEnumeration) {
  lgst::Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index m = 1 + trial % 4;
    Eigen::MatrixXd a(8, m);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = lgst::uniform(rng, -1, 1);
    Eigen::VectorXd y(8);
    for (Eigen::Index i = 0; i < 8; ++i) y[i] = lgst::uniform(rng, -1, 1);
    lgst::SparseRowMatrix s = a.sparseView();
    const auto got = lgst::solve_stochastic(s, y);
    const auto want = nnls_by_enumeration(a, y);
    ASSERT_TRUE(got.converged);
    EXPECT_LT((got.x - want).cwiseAbs().maxCoeff(), 1e-9) << "trial " << trial;
    for (Eigen::Index i = 0; i < m; ++i) {
      EXPECT_GE(got.x[i], 0.0);
      EXPECT_FALSE(std::signbit(got.x[i]));
    }
  }
}

TEST(Solver, NnlsClampsNegativeCoordinate) {
  // Unconstrained solution is (1, -1); the constrained optimum is (y.a0 / |a0|^2, 0).
  Eigen::MatrixXd a(2, 2);
  a << 1, 0, 0, 1;
  lgst::SparseRowMatrix s = a.sparseView();
  const auto r = lgst::solve_stochastic(s, Eigen::Vector2d(1.0, -1.0));
  EXPECT_EQ(r.x[0], 1.0);
  EXPECT_EQ(r.x[1], 0.0);
  EXPECT_FALSE(std::signbit(r.x[1]));
  EXPECT_EQ(r.passive, (std::vector<char>{1, 0}));
}

TEST(Solver, NnlsKktHoldsOnLargerProblems) {
  lgst::Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd a(60, 25);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = std::round(lgst::uniform(rng, -2, 2));
    Eigen::VectorXd y(60);
    for (Eigen::Index i = 0; i < 60; ++i) y[i] = lgst::uniform(rng, -1, 1);
    lgst::SparseRowMatrix s = a.sparseView();
    const auto ne = lgst::normal_equations(s, y);
    const auto r = lgst::solve_nnls(ne);
    ASSERT_TRUE(r.converged);
    EXPECT_LE(r.kkt_residual, r.tolerance);
    EXPECT_NEAR(lgst::kkt_residual(ne.gram, ne.rhs, r.x), r.kkt_residual, 1e-12);
    EXPECT_NEAR(r.residual, (a * r.x - y).norm(), 1e-10);
  }
}

TEST(Solver, NnlsReportsNonConvergence) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(6, 6);
  lgst::SparseRowMatrix s = a.sparseView();
  lgst::NnlsOptions opts;
  opts.max_iterations = 1;
  const auto r = lgst::solve_stochastic(s, Eigen::VectorXd::Ones(6), opts);
  EXPECT_FALSE(r.converged);
}

TEST(Solver, NnlsEmptyProblem) {
  lgst::SparseRowMatrix s(0, 3);
  const auto r = lgst::solve_stochastic(s, Eigen::VectorXd(0));
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.x, Eigen::VectorXd::Zero(3));
}

TEST(Solver, ScalarStandardErrorClosedForm) {
  const int k = 50;
  const double dval = -2.0, var = 0.01;
  for (auto kind : {GeneratorKind::H, GeneratorKind::S}) {
    const std::int8_t ideal = kind == GeneratorKind::H ? 0 : 1;
    auto d = make_design(Eigen::MatrixXd::Constant(k, 1, dval), std::vector<std::int8_t>(k, ideal), {kind});
    // Data making the fitted rate positive so the S coordinate is passive.
    const auto fit = lgst::fit_rates(d, Eigen::VectorXd::Constant(k, -0.02));
    EXPECT_NEAR(fit.rates[0], 0.01, 1e-15);
    const auto se = lgst::linear_propagation_stderr(d, fit, Eigen::VectorXd::Constant(k, var));
    EXPECT_NEAR(se[0], std::sqrt(var / k) / std::abs(dval), 1e-15);
  }
}

TEST(Solver, InfiniteShotsGiveZeroStderr) {
  const Eigen::VectorXd v = lgst::shot_variance(Eigen::Vector3d(0.5, -0.9, 1.0), {0, 0, 0});
  EXPECT_EQ(v, Eigen::Vector3d::Zero());
  const Eigen::VectorXd w = lgst::shot_variance(Eigen::Vector3d(0.5, -1.0, 0.0), {100, 10, 4});
  EXPECT_DOUBLE_EQ(w[0], 0.75 / 100);
  EXPECT_DOUBLE_EQ(w[1], 0.0);
  EXPECT_DOUBLE_EQ(w[2], 0.25);
}

TEST(Solver, ClampedStochasticRateHasZeroStderr) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 0, 0, 1;
  auto d = make_design(a, {1, 1}, {GeneratorKind::S, GeneratorKind::S});
  const auto fit = lgst::fit_rates(d, Eigen::Vector2d(1.0, -1.0));
  const auto se = lgst::linear_propagation_stderr(d, fit, Eigen::Vector2d(0.04, 0.04));
  EXPECT_NEAR(se[0], 0.2, 1e-15);
  EXPECT_EQ(se[1], 0.0);
}

TEST(Solver, BootstrapAgreesWithLinearPropagation) {
  auto p = full_rank_problem(4, 8, 4);
  const Eigen::VectorXd truth = as_vector(p.gm.rates);
  const Eigen::VectorXd exact_delta = p.d.matrix * truth;
  std::vector<double> exact(static_cast<std::size_t>(exact_delta.size()));
  for (std::size_t r = 0; r < exact.size(); ++r) exact[r] = p.d.ideal[r] + exact_delta[static_cast<Eigen::Index>(r)];
  const std::uint64_t shots = 1000;
  const auto noisy = lgst::add_gaussian_shot_noise(exact, p.design.observables.size(), shots, 3);
  Eigen::VectorXd measured(static_cast<Eigen::Index>(noisy.size())), delta(measured.size());
  for (std::size_t r = 0; r < noisy.size(); ++r) {
    measured[static_cast<Eigen::Index>(r)] = noisy[r];
    delta[static_cast<Eigen::Index>(r)] = noisy[r] - p.d.ideal[r];
  }
  lgst::FitOptions opts;
  opts.route = lgst::SolveRoute::normal;
  const auto fit = lgst::fit_rates(p.d, delta, opts);
  const auto var = lgst::shot_variance(measured, std::vector<std::uint64_t>(noisy.size(), shots));
  const auto lin = lgst::linear_propagation_stderr(p.d, fit, var);
  const auto boot = lgst::bootstrap_stderr(p.d, delta, 200, 11, opts);
  std::vector<double> ratios;
  for (Eigen::Index i = 0; i < lin.size(); ++i) {
    if (lin[i] > 0) ratios.push_back(boot[i] / lin[i]);
  }
  ASSERT_FALSE(ratios.empty());
  std::nth_element(ratios.begin(), ratios.begin() + static_cast<long>(ratios.size() / 2), ratios.end());
  const double median = ratios[ratios.size() / 2];
  EXPECT_GT(median, 0.5);
  EXPECT_LT(median, 2.0);
}

TEST(Solver, BootstrapIsDeterministic) {
  auto p = full_rank_problem(3, 2);
  const Eigen::VectorXd y = p.d.matrix * as_vector(p.gm.rates);
  const auto a = lgst::bootstrap_stderr(p.d, y, 20, 4);
  const auto b = lgst::bootstrap_stderr(p.d, y, 20, 4);
  EXPECT_EQ(a, b);
}
