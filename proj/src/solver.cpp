#include "lgst/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "lgst/errors.hpp"
#include "lgst/random.hpp"

namespace lgst {

namespace {

double residual_norm(const SparseRowMatrix& d, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return (d * x - y).norm();
}

template <typename Svd>
HamiltonianFit pinv_from_svd(const Svd& svd, const Eigen::VectorXd& c, std::size_t rows,
                             std::size_t cols) {
  const Eigen::VectorXd& sv = svd.singularValues();
  HamiltonianFit fit;
  const double smax = sv.size() ? sv(0) : 0.0;
  const double tol = rank_tolerance(rows, cols, smax);
  Eigen::VectorXd uc = svd.matrixU().transpose() * c;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol && sv(i) > 0.0) {
      uc(i) /= sv(i);
      ++fit.rank;
    } else {
      uc(i) = 0.0;
    }
  }
  fit.x = svd.matrixV() * uc;
  fit.null_space_dim = cols - fit.rank;
  return fit;
}

}  // namespace

HamiltonianFit solve_hamiltonian(const SparseRowMatrix& d_h, const Eigen::VectorXd& y) {
  const auto rows = static_cast<std::size_t>(d_h.rows());
  const auto cols = static_cast<std::size_t>(d_h.cols());
  if (static_cast<std::size_t>(y.size()) != rows) {
    throw DimensionError("solve_hamiltonian: y has " + std::to_string(y.size()) +
                         " entries for " + std::to_string(rows) + " rows");
  }
  HamiltonianFit fit;
  if (rows == 0 || cols == 0 || d_h.nonZeros() == 0) {
    fit.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols));
    fit.null_space_dim = cols;
    fit.residual = y.norm();
    return fit;
  }
  const Eigen::MatrixXd a(d_h);
  if (rows > cols) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::MatrixXd r =
        qr.matrixQR().topRows(static_cast<Eigen::Index>(cols)).triangularView<Eigen::Upper>();
    const Eigen::VectorXd c =
        (qr.householderQ().transpose() * y).head(static_cast<Eigen::Index>(cols));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
    fit = pinv_from_svd(svd, c, rows, cols);
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    fit = pinv_from_svd(svd, y, rows, cols);
  }
  fit.residual = residual_norm(d_h, fit.x, y);
  return fit;
}

NormalEquations normal_equations(const SparseRowMatrix& d, const Eigen::VectorXd& y) {
  if (y.size() != d.rows()) throw DimensionError("normal_equations: size mismatch");
  NormalEquations ne;
  const Eigen::SparseMatrix<double> dc = d;  // column major for the transpose product
  ne.gram = Eigen::MatrixXd(Eigen::SparseMatrix<double>(dc.transpose() * dc));
  ne.rhs = dc.transpose() * y;
  ne.yty = y.squaredNorm();
  ne.rows = static_cast<std::size_t>(d.rows());
  return ne;
}

HamiltonianFit solve_hamiltonian_normal(const NormalEquations& ne) {
  const auto cols = static_cast<std::size_t>(ne.gram.cols());
  HamiltonianFit fit;
  fit.x = Eigen::VectorXd::Zero(ne.gram.cols());
  if (cols == 0) return fit;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ne.gram);
  const Eigen::VectorXd& lambda = eig.eigenvalues();  // ascending
  const double lmax = std::max(lambda(lambda.size() - 1), 0.0);
  const double stol = rank_tolerance(ne.rows, cols, std::sqrt(lmax));
  // Eigenvalues of the Gram matrix carry absolute error ~ eps * lmax.
  const double ltol = std::max(stol * stol, 8.0 * static_cast<double>(cols) *
                                                std::numeric_limits<double>::epsilon() * lmax);
  Eigen::VectorXd c = eig.eigenvectors().transpose() * ne.rhs;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (lambda(i) > ltol && lmax > 0.0) {
      c(i) /= lambda(i);
      ++fit.rank;
    } else {
      c(i) = 0.0;
    }
  }
  fit.x = eig.eigenvectors() * c;
  fit.null_space_dim = cols - fit.rank;
  const double r2 = ne.yty - 2.0 * ne.rhs.dot(fit.x) + fit.x.dot(ne.gram * fit.x);
  fit.residual = std::sqrt(std::max(r2, 0.0));
  return fit;
}

double kkt_residual(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                    const Eigen::VectorXd& x) {
  const Eigen::VectorXd g = gram * x - rhs;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double v;
    if (x(i) < 0.0) {
      v = -x(i);
    } else if (x(i) == 0.0) {
      v = std::max(0.0, -g(i));
    } else {
      v = std::abs(g(i));
    }
    worst = std::max(worst, v);
  }
  return worst;
}

namespace {

// Least squares on the passive set: G_PP z = b_P.
Eigen::VectorXd passive_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                              const std::vector<Eigen::Index>& idx) {
  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd g(m, m);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    b(i) = rhs(idx[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m; ++j) {
      g(i, j) = gram(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  Eigen::VectorXd z;
  if (llt.info() == Eigen::Success) {
    z = llt.solve(b);
    // One step of iterative refinement; G is exact, so this recovers most of the
    // accuracy lost to conditioning.
    z += llt.solve(b - g * z);
  } else {
    z = g.completeOrthogonalDecomposition().solve(b);
  }
  return z;
}

}  // namespace

NnlsResult solve_nnls(const NormalEquations& ne, const NnlsOptions& opts) {
  const Eigen::Index k = ne.gram.cols();
  if (ne.gram.rows() != k || ne.rhs.size() != k) throw DimensionError("solve_nnls: size mismatch");
  NnlsResult res;
  res.x = Eigen::VectorXd::Zero(k);
  res.passive.assign(static_cast<std::size_t>(k), 0);
  res.tolerance = opts.tolerance_factor * (k ? ne.rhs.cwiseAbs().maxCoeff() : 0.0);
  const std::size_t cap =
      opts.max_iterations ? opts.max_iterations : 10 * static_cast<std::size_t>(std::max<Eigen::Index>(k, 1));

  std::vector<char>& passive = res.passive;
  Eigen::VectorXd& x = res.x;
  Eigen::VectorXd w = ne.rhs;  // -gradient
  std::vector<char> blocked(static_cast<std::size_t>(k), 0);

  while (true) {
    Eigen::Index j = -1;
    double best = res.tolerance;
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto u = static_cast<std::size_t>(i);
      if (!passive[u] && !blocked[u] && w(i) > best) {
        best = w(i);
        j = i;
      }
    }
    if (j < 0) break;
    if (res.iterations >= cap) {
      res.converged = false;
      break;
    }
    passive[static_cast<std::size_t>(j)] = 1;

    bool entered = true;
    while (true) {
      ++res.iterations;
      std::vector<Eigen::Index> idx;
      for (Eigen::Index i = 0; i < k; ++i) {
        if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
      }
      const Eigen::VectorXd z = passive_solve(ne.gram, ne.rhs, idx);
      if (entered) {
        // The entering coordinate must move into the interior; if rounding says
        // otherwise, drop it for this round instead of cycling.
        const auto pos = std::find(idx.begin(), idx.end(), j) - idx.begin();
        if (!(z(pos) > 0.0)) {
          passive[static_cast<std::size_t>(j)] = 0;
          blocked[static_cast<std::size_t>(j)] = 1;
          break;
        }
        entered = false;
      }
      bool feasible = true;
      for (Eigen::Index t = 0; t < z.size(); ++t) feasible = feasible && z(t) > 0.0;
      if (feasible) {
        for (Eigen::Index t = 0; t < z.size(); ++t) x(idx[static_cast<std::size_t>(t)]) = z(t);
        std::fill(blocked.begin(), blocked.end(), 0);
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index t = 0; t < z.size(); ++t) {
        const Eigen::Index i = idx[static_cast<std::size_t>(t)];
        if (z(t) <= 0.0) alpha = std::min(alpha, x(i) / (x(i) - z(t)));
      }
      for (Eigen::Index t = 0; t < z.size(); ++t) {
        const Eigen::Index i = idx[static_cast<std::size_t>(t)];
        x(i) += alpha * (z(t) - x(i));
        if (z(t) <= 0.0 && x(i) <= std::abs(x(i) - z(t)) * 1e-14) x(i) = 0.0;
        if (x(i) <= 0.0) {
          x(i) = 0.0;
          passive[static_cast<std::size_t>(i)] = 0;
        }
      }
      if (res.iterations >= cap) {
        res.converged = false;
        break;
      }
    }
    w = ne.rhs - ne.gram * x;
    if (!res.converged) break;
  }

  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(x(i) > 0.0)) x(i) = 0.0;  // clears -0.0 and any NaN from a failed solve
    passive[static_cast<std::size_t>(i)] = x(i) > 0.0;
  }
  res.kkt_residual = kkt_residual(ne.gram, ne.rhs, x);
  const double r2 = ne.yty - 2.0 * ne.rhs.dot(x) + x.dot(ne.gram * x);
  res.residual = std::sqrt(std::max(r2, 0.0));
  return res;
}

NnlsResult solve_stochastic(const SparseRowMatrix& d_s, const Eigen::VectorXd& y,
                            const NnlsOptions& opts) {
  NnlsResult res = solve_nnls(normal_equations(d_s, y), opts);
  if (d_s.rows() > 0) res.residual = residual_norm(d_s, res.x, y);
  return res;
}

nlohmann::json FitResult::meta() const {
  return {{"hamiltonian",
           {{"method", route == SolveRoute::qr ? "householder-qr+svd pseudo-inverse"
                                           : "normal-equation eigendecomposition pseudo-inverse"},
            {"rows", h_rows},
            {"rank", hamiltonian.rank},
            {"null_space_dim", hamiltonian.null_space_dim},
            {"residual", hamiltonian.residual}}},
          {"stochastic",
           {{"method", "lawson-hanson nnls"},
            {"rows", s_rows},
            {"iterations", stochastic.iterations},
            {"converged", stochastic.converged},
            {"tolerance", stochastic.tolerance},
            {"kkt_residual", stochastic.kkt_residual},
            {"residual", stochastic.residual}}}};
}

FitResult fit_rates(const DesignMatrix& d, const Eigen::VectorXd& delta, const FitOptions& opts) {
  if (static_cast<std::size_t>(delta.size()) != d.rows()) {
    throw DimensionError("fit_rates: " + std::to_string(delta.size()) + " observations for " +
                         std::to_string(d.rows()) + " design rows");
  }
  FitResult out;
  out.route = opts.route;
  out.rates = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.cols()));
  const auto h_rows = d.rows_of_kind(GeneratorKind::H);
  const auto s_rows = d.rows_of_kind(GeneratorKind::S);
  const auto h_cols = d.columns_of_kind(GeneratorKind::H);
  const auto s_cols = d.columns_of_kind(GeneratorKind::S);
  out.h_rows = h_rows.size();
  out.s_rows = s_rows.size();

  auto gather = [&](const std::vector<std::size_t>& rows) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = delta(static_cast<Eigen::Index>(rows[i]));
    return y;
  };

  const SparseRowMatrix dh = d.block(h_rows, h_cols);
  const Eigen::VectorXd yh = gather(h_rows);
  if (opts.route == SolveRoute::qr) {
    out.hamiltonian = solve_hamiltonian(dh, yh);
  } else {
    out.hamiltonian = solve_hamiltonian_normal(normal_equations(dh, yh));
  }
  const SparseRowMatrix ds = d.block(s_rows, s_cols);
  out.stochastic = solve_stochastic(ds, gather(s_rows), opts.nnls);

  for (std::size_t i = 0; i < h_cols.size(); ++i) {
    out.rates(static_cast<Eigen::Index>(h_cols[i])) = out.hamiltonian.x(static_cast<Eigen::Index>(i));
  }
  for (std::size_t i = 0; i < s_cols.size(); ++i) {
    out.rates(static_cast<Eigen::Index>(s_cols[i])) = out.stochastic.x(static_cast<Eigen::Index>(i));
  }
  return out;
}

Eigen::VectorXd shot_variance(const Eigen::VectorXd& measured,
                              const std::vector<std::uint64_t>& shots) {
  if (static_cast<std::size_t>(measured.size()) != shots.size()) {
    throw DimensionError("shot_variance: size mismatch");
  }
  Eigen::VectorXd v(measured.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const auto n = shots[static_cast<std::size_t>(i)];
    const double q = std::clamp(measured(i), -1.0, 1.0);
    v(i) = n == 0 ? 0.0 : (1.0 - q * q) / static_cast<double>(n);
  }
  return v;
}

namespace {

// Pseudo-inverse of a symmetric positive semi-definite matrix with the Gram threshold.
Eigen::MatrixXd gram_pinv(const Eigen::MatrixXd& g, std::size_t rows) {
  if (g.cols() == 0) return g;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double lmax = std::max(lambda(lambda.size() - 1), 0.0);
  const double stol = rank_tolerance(rows, static_cast<std::size_t>(g.cols()), std::sqrt(lmax));
  const double ltol = std::max(stol * stol, 8.0 * static_cast<double>(g.cols()) *
                                                std::numeric_limits<double>::epsilon() * lmax);
  Eigen::VectorXd inv(lambda.size());
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv(i) = lambda(i) > ltol ? 1.0 / lambda(i) : 0.0;
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::VectorXd sandwich_stderr(const SparseRowMatrix& block, const Eigen::VectorXd& var) {
  const Eigen::SparseMatrix<double> dc = block;
  const Eigen::MatrixXd g(Eigen::SparseMatrix<double>(dc.transpose() * dc));
  const Eigen::MatrixXd meat(
      Eigen::SparseMatrix<double>(dc.transpose() * var.asDiagonal() * dc));
  const Eigen::MatrixXd p = gram_pinv(g, static_cast<std::size_t>(block.rows()));
  const Eigen::MatrixXd cov = p * meat * p;
  return cov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

Eigen::VectorXd linear_propagation_stderr(const DesignMatrix& d, const FitResult& fit,
                                          const Eigen::VectorXd& variance) {
  if (static_cast<std::size_t>(variance.size()) != d.rows()) {
    throw DimensionError("linear_propagation_stderr: size mismatch");
  }
  Eigen::VectorXd se = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.cols()));
  if (variance.size() == 0 || variance.maxCoeff() == 0.0) return se;

  auto gather = [&](const std::vector<std::size_t>& rows) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) v(static_cast<Eigen::Index>(i)) = variance(static_cast<Eigen::Index>(rows[i]));
    return v;
  };

  const auto h_rows = d.rows_of_kind(GeneratorKind::H);
  const auto h_cols = d.columns_of_kind(GeneratorKind::H);
  if (!h_rows.empty() && !h_cols.empty()) {
    const Eigen::VectorXd s = sandwich_stderr(d.block(h_rows, h_cols), gather(h_rows));
    for (std::size_t i = 0; i < h_cols.size(); ++i) se(static_cast<Eigen::Index>(h_cols[i])) = s(static_cast<Eigen::Index>(i));
  }
  const auto s_rows = d.rows_of_kind(GeneratorKind::S);
  const auto s_cols = d.columns_of_kind(GeneratorKind::S);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < s_cols.size(); ++i) {
    if (fit.rates(static_cast<Eigen::Index>(s_cols[i])) > 0.0) active.push_back(s_cols[i]);
  }
  if (!s_rows.empty() && !active.empty()) {
    const Eigen::VectorXd s = sandwich_stderr(d.block(s_rows, active), gather(s_rows));
    for (std::size_t i = 0; i < active.size(); ++i) se(static_cast<Eigen::Index>(active[i])) = s(static_cast<Eigen::Index>(i));
  }
  return se;
}

Eigen::VectorXd bootstrap_stderr(const DesignMatrix& d, const Eigen::VectorXd& delta,
                                 std::size_t replicates, std::uint64_t seed,
                                 const FitOptions& opts) {
  const auto kappa = static_cast<Eigen::Index>(d.cols());
  if (replicates < 2) throw DesignError("bootstrap needs at least 2 replicates");
  std::size_t num_circuits = 0;
  for (auto c : d.circuit_index) num_circuits = std::max<std::size_t>(num_circuits, c + 1);
  std::vector<std::vector<std::size_t>> rows_by_circuit(num_circuits);
  for (std::size_t r = 0; r < d.rows(); ++r) rows_by_circuit[d.circuit_index[r]].push_back(r);

  FitOptions local = opts;
  local.route = SolveRoute::normal;
  Eigen::MatrixXd samples(kappa, static_cast<Eigen::Index>(replicates));
#pragma omp parallel for schedule(dynamic)
  for (std::size_t b = 0; b < replicates; ++b) {
    Rng rng(derive_seed(seed, b));
    std::vector<std::size_t> pick(num_circuits);
    for (auto& c : pick) c = static_cast<std::size_t>(uniform_index(rng, num_circuits));
    DesignMatrix sub = d.select_circuits(pick);
    Eigen::VectorXd y(static_cast<Eigen::Index>(sub.rows()));
    Eigen::Index pos = 0;
    for (auto c : pick) {
      for (auto r : rows_by_circuit[c]) y(pos++) = delta(static_cast<Eigen::Index>(r));
    }
    samples.col(static_cast<Eigen::Index>(b)) = fit_rates(sub, y, local).rates;
  }
  const Eigen::VectorXd mean = samples.rowwise().mean();
  const Eigen::MatrixXd centered = samples.colwise() - mean;
  return (centered.rowwise().squaredNorm() / static_cast<double>(replicates - 1)).cwiseSqrt();
}

}  // namespace lgst
