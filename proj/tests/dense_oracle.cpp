#include "dense_oracle.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oracle {

namespace {

using cd = std::complex<double>;

Mat single(char op) {
  Mat m(2, 2);
  switch (op) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, cd(0, -1), cd(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: throw std::invalid_argument("bad Pauli letter");
  }
  return m;
}

Mat kron_all(const std::vector<Mat>& factors) {
  Mat out = Mat::Identity(1, 1);
  for (const auto& f : factors) out = Eigen::kroneckerProduct(out, f).eval();
  return out;
}

Mat local_gate(const std::string& name) {
  const double r = 1.0 / std::sqrt(2.0);
  const cd i(0, 1);
  auto rot = [&](char axis) {
    return Mat((Mat::Identity(2, 2) * std::cos(std::numbers::pi / 4) -
                i * std::sin(std::numbers::pi / 4) * single(axis)));
  };
  Mat m;
  if (name == "idle") return Mat::Identity(2, 2);
  if (name == "x" || name == "y" || name == "z") return single(static_cast<char>(name[0] - 32));
  if (name == "x90") return rot('X');
  if (name == "y90") return rot('Y');
  if (name == "z90") return rot('Z');
  if (name == "h") {
    m.resize(2, 2);
    m << r, r, r, -r;
    return m;
  }
  if (name == "s") {
    m.resize(2, 2);
    m << 1, 0, 0, i;
    return m;
  }
  if (name == "sdg") {
    m.resize(2, 2);
    m << 1, 0, 0, -i;
    return m;
  }
  if (name == "cz") {
    m = Mat::Identity(4, 4);
    m(3, 3) = -1;
    return m;
  }
  if (name == "cx") {
    m = Mat::Zero(4, 4);
    m(0, 0) = m(1, 1) = 1;
    m(2, 3) = m(3, 2) = 1;
    return m;
  }
  throw std::invalid_argument("oracle: unknown gate " + name);
}

}  // namespace

Mat pauli_matrix(const lgst::PauliString& p) {
  std::vector<Mat> f;
  for (std::size_t q = 0; q < p.num_qubits(); ++q) f.push_back(single(p.op(q)));
  static const cd powers[4] = {1, cd(0, 1), -1, cd(0, -1)};
  return powers[p.phase()] * kron_all(f);
}

Mat gate_unitary(const std::string& name, std::size_t n, std::span<const std::size_t> targets) {
  if (name == "prep" || name == "meas") return Mat::Identity(1 << n, 1 << n);
  const Mat g = local_gate(name);
  const std::size_t dim = std::size_t{1} << n;
  const std::size_t k = targets.size();
  Mat out = Mat::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  // Bit of qubit q in a basis index: qubit 0 is the most significant bit.
  auto bit = [&](std::size_t idx, std::size_t q) { return (idx >> (n - 1 - q)) & 1u; };
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t local_in = 0;
    for (std::size_t t = 0; t < k; ++t) local_in = (local_in << 1) | bit(col, targets[t]);
    for (std::size_t local_out = 0; local_out < (std::size_t{1} << k); ++local_out) {
      const cd amp = g(static_cast<Eigen::Index>(local_out), static_cast<Eigen::Index>(local_in));
      if (amp == cd(0)) continue;
      std::size_t row = col;
      for (std::size_t t = 0; t < k; ++t) {
        const std::size_t b = (local_out >> (k - 1 - t)) & 1u;
        const std::size_t mask = std::size_t{1} << (n - 1 - targets[t]);
        row = b ? (row | mask) : (row & ~mask);
      }
      out(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) += amp;
    }
  }
  return out;
}

Mat layer_unitary(const lgst::Layer& layer, std::size_t n) {
  Mat u = Mat::Identity(1 << n, 1 << n);
  for (const auto& g : layer) u = (gate_unitary(g.gate, n, g.targets) * u).eval();
  return u;
}

Mat circuit_unitary(const lgst::Circuit& c) {
  Mat u = Mat::Identity(1 << c.num_qubits(), 1 << c.num_qubits());
  for (const auto& l : c.layers()) u = (layer_unitary(l, c.num_qubits()) * u).eval();
  return u;
}

lgst::PauliString matrix_to_pauli(const Mat& m, std::size_t n) {
  const std::size_t total = std::size_t{1} << (2 * n);
  const double dim = static_cast<double>(std::size_t{1} << n);
  static const char letters[4] = {'I', 'X', 'Y', 'Z'};
  for (std::size_t code = 0; code < total; ++code) {
    lgst::PauliString p(n);
    for (std::size_t q = 0; q < n; ++q) p.set_op(q, letters[(code >> (2 * q)) & 3]);
    const cd overlap = (pauli_matrix(p).adjoint() * m).trace() / dim;
    if (std::abs(std::abs(overlap) - 1.0) < 1e-9) {
      for (int ph = 0; ph < 4; ++ph) {
        static const cd powers[4] = {1, cd(0, 1), -1, cd(0, -1)};
        if (std::abs(overlap - powers[ph]) < 1e-9) {
          p.set_phase(ph);
          return p;
        }
      }
    }
  }
  throw std::runtime_error("matrix is not a Pauli operator");
}

Vec zero_state(std::size_t n) {
  Vec v = Vec::Zero(1 << n);
  v(0) = 1;
  return v;
}

Mat generator_superop(lgst::GeneratorKind kind, const lgst::PauliString& p) {
  const Mat m = pauli_matrix(p);
  const Mat id = Mat::Identity(m.rows(), m.cols());
  // vec(A rho B) = (B^T kron A) vec(rho)
  if (kind == lgst::GeneratorKind::H) {
    const cd i(0, 1);
    return Mat(-i * (Eigen::kroneckerProduct(id, m) - Eigen::kroneckerProduct(m.transpose(), id)));
  }
  return Mat(Eigen::kroneckerProduct(m.transpose(), m)) - Mat(Eigen::kroneckerProduct(id, id));
}

std::vector<double> noisy_expectations(const lgst::Circuit& c, const lgst::ErrorModel& model,
                                       const std::vector<double>& rates,
                                       std::span<const lgst::PauliString> observables) {
  const std::size_t n = c.num_qubits();
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
  lgst::RateVector rv = lgst::RateVector::zeros(model);
  rv.values = rates;
  const Vec psi0 = zero_state(n);
  Mat rho = psi0 * psi0.adjoint();

  auto apply_noise = [&](const lgst::Layer& layer) {
    Mat l = Mat::Zero(dim * dim, dim * dim);
    for (const auto& [g, rate] : lgst::layer_lindbladian(model, rv, layer)) {
      l += rate * generator_superop(g.kind, g.label);
    }
    const Mat e = l.exp();
    Eigen::Map<Vec> v(rho.data(), dim * dim);
    const Vec out = e * v;
    rho = Eigen::Map<const Mat>(out.data(), dim, dim);
  };
  auto pseudo = [&](const char* name) {
    return model.gate_index(name) ? lgst::Layer{{name, {}}} : lgst::Layer{};
  };

  apply_noise(pseudo("prep"));
  for (const auto& layer : c.layers()) {
    const Mat u = layer_unitary(layer, n);
    rho = (u * rho * u.adjoint()).eval();
    apply_noise(layer);
  }
  apply_noise(pseudo("meas"));

  std::vector<double> out;
  for (const auto& q : observables) out.push_back((pauli_matrix(q) * rho).trace().real());
  return out;
}

std::vector<std::vector<double>> finite_difference_rows(
    const lgst::Circuit& c, const lgst::ErrorModel& model,
    std::span<const lgst::PauliString> observables, double step) {
  const std::size_t kappa = model.num_parameters();
  std::vector<std::vector<double>> rows(observables.size(), std::vector<double>(kappa));
  for (std::size_t i = 0; i < kappa; ++i) {
    std::vector<double> plus(kappa, 0.0), minus(kappa, 0.0);
    plus[i] = step;
    minus[i] = -step;
    const auto a = noisy_expectations(c, model, plus, observables);
    const auto b = noisy_expectations(c, model, minus, observables);
    for (std::size_t k = 0; k < observables.size(); ++k) rows[k][i] = (a[k] - b[k]) / (2 * step);
  }
  return rows;
}

}  // namespace oracle
