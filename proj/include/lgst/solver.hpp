#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "lgst/design.hpp"

namespace lgst {

struct HamiltonianFit {
  Eigen::VectorXd x;
  double residual = 0.0;  // ||D x - y||_2
  std::size_t rank = 0;
  std::size_t null_space_dim = 0;
};

/// Minimum-norm least squares via Householder QR of D followed by an SVD of R, with the
/// design rank threshold. An all-zero D gives rank 0 and x = 0.
HamiltonianFit solve_hamiltonian(const SparseRowMatrix& d_h, const Eigen::VectorXd& y);

/// Normal-equation form of a least-squares problem: G = D^T D, b = D^T y, yty = y^T y.
/// Design entries are small even integers, so G is formed exactly.
struct NormalEquations {
  Eigen::MatrixXd gram;
  Eigen::VectorXd rhs;
  double yty = 0.0;
  std::size_t rows = 0;
};
NormalEquations normal_equations(const SparseRowMatrix& d, const Eigen::VectorXd& y);

/// Pseudo-inverse solution from the normal equations (eigendecomposition of G). Faster
/// than solve_hamiltonian for many right-hand sides or column subsets; slightly less
/// accurate for ill-conditioned D.
HamiltonianFit solve_hamiltonian_normal(const NormalEquations& ne);

struct NnlsOptions {
  double tolerance_factor = 1e-10;  // tol = factor * ||D^T y||_inf
  std::size_t max_iterations = 0;   // 0 means 10 * kappa
};

struct NnlsResult {
  Eigen::VectorXd x;  // every coordinate >= +0.0, clamped ones exactly +0.0
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
  double tolerance = 0.0;
  double kkt_residual = 0.0;
  std::vector<char> passive;  // 1 where x_i > 0
};

/// Lawson-Hanson active-set NNLS on the normal equations.
NnlsResult solve_nnls(const NormalEquations& ne, const NnlsOptions& opts = {});
NnlsResult solve_stochastic(const SparseRowMatrix& d_s, const Eigen::VectorXd& y,
                            const NnlsOptions& opts = {});

/// max over i of: -x_i if x_i < 0; max(0, -g_i) if x_i == 0; |g_i| if x_i > 0, with
/// g = G x - b the gradient of the half squared residual.
double kkt_residual(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                    const Eigen::VectorXd& x);

enum class SolveRoute { qr, normal };

struct FitOptions {
  SolveRoute route = SolveRoute::qr;
  NnlsOptions nnls;
};

/// Both decoupled fits on a full design matrix. `delta` holds measured minus ideal per
/// row.
struct FitResult {
  Eigen::VectorXd rates;  // length kappa, canonical parameter order
  HamiltonianFit hamiltonian;
  NnlsResult stochastic;
  std::size_t h_rows = 0;
  std::size_t s_rows = 0;
  SolveRoute route = SolveRoute::qr;
  bool converged() const { return stochastic.converged; }
  nlohmann::json meta() const;
};

FitResult fit_rates(const DesignMatrix& d, const Eigen::VectorXd& delta,
                    const FitOptions& opts = {});

/// Per-row shot-noise variance (1 - <Q>^2)/N; shots == 0 means infinitely many (variance 0).
Eigen::VectorXd shot_variance(const Eigen::VectorXd& measured,
                              const std::vector<std::uint64_t>& shots);

/// Standard errors by linear propagation of per-row variances through the H pseudo-inverse
/// and through the S passive set of `fit` (clamped rates get 0). Ignores correlations
/// between rows.
Eigen::VectorXd linear_propagation_stderr(const DesignMatrix& d, const FitResult& fit,
                                          const Eigen::VectorXd& variance);

/// Bootstrap over whole circuits: `replicates` resamples with replacement, each refit via
/// the normal-equation route, stream b seeded by derive_seed(seed, b). Returns the
/// empirical standard deviation per parameter.
Eigen::VectorXd bootstrap_stderr(const DesignMatrix& d, const Eigen::VectorXd& delta,
                                 std::size_t replicates, std::uint64_t seed,
                                 const FitOptions& opts = {});

}  // namespace lgst
