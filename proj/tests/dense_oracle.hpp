#pragma once

// Brute-force reference implementations on explicit 2^n x 2^n matrices. Test code only.

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "lgst/circuit.hpp"
#include "lgst/error_model.hpp"
#include "lgst/pauli.hpp"

namespace oracle {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// Qubit 0 is the leftmost Kronecker factor.
Mat pauli_matrix(const lgst::PauliString& p);
Mat gate_unitary(const std::string& name, std::size_t n, std::span<const std::size_t> targets);
Mat layer_unitary(const lgst::Layer& layer, std::size_t n);
Mat circuit_unitary(const lgst::Circuit& c);

// Reads a Hermitian matrix M = +-P back as a PauliString (throws if it is not one).
lgst::PauliString matrix_to_pauli(const Mat& m, std::size_t n);

Vec zero_state(std::size_t n);

// Superoperator of an elementary generator on column-stacked density matrices.
Mat generator_superop(lgst::GeneratorKind kind, const lgst::PauliString& p);

// Exact noisy expectations via density matrices and dense matrix exponentials.
std::vector<double> noisy_expectations(const lgst::Circuit& c, const lgst::ErrorModel& model,
                                       const std::vector<double>& rates,
                                       std::span<const lgst::PauliString> observables);

// Central finite differences d<Q>/d rate_i at rates = 0; result[k][i] for observable k.
std::vector<std::vector<double>> finite_difference_rows(
    const lgst::Circuit& c, const lgst::ErrorModel& model,
    std::span<const lgst::PauliString> observables, double step = 1e-6);

}  // namespace oracle
