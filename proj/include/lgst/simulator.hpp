#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lgst/circuit.hpp"
#include "lgst/design.hpp"
#include "lgst/error_model.hpp"
#include "lgst/pauli.hpp"

namespace lgst {

enum class Backend { dense, taylor };

struct SimulatorConfig {
  Backend backend = Backend::taylor;
  int order = 3;               // taylor only
  std::uint64_t shots = 0;     // 0 = infinitely many
  std::uint64_t seed = 0;
  std::size_t dense_max_qubits = 5;
  double dense_tolerance = 1e-13;
};

/// Default backend: dense up to the guard, taylor(3) beyond.
SimulatorConfig default_simulator(std::size_t num_qubits);

/// Exact noisy expectations <Z^z> for every z in [0, 2^n) (bit j of z = qubit j), from the
/// Pauli-transfer representation: each layer is the ideal signed permutation followed by
/// exp of the merged layer Lindbladian, applied to the state vector by a scaled truncated
/// Taylor series to `tolerance`. Throws BackendError above `max_qubits`.
std::vector<double> simulate_dense_z(const Circuit& circuit, const ErrorModel& model,
                                     const RateVector& rates, std::size_t max_qubits = 5,
                                     double tolerance = 1e-13);

/// <Q> for Z-type observables via simulate_dense_z.
std::vector<double> simulate_dense(const Circuit& circuit, const ErrorModel& model,
                                   const RateVector& rates,
                                   std::span<const PauliString> observables,
                                   std::size_t max_qubits = 5);

/// <Q> with the product of propagated layer exponentials expanded to total order k in the
/// rates. Order 1 equals ideal + (sensitivity row) . rates.
std::vector<double> simulate_taylor(const Circuit& circuit, const ErrorModel& model,
                                    const RateVector& rates,
                                    std::span<const PauliString> observables, int order);

/// Design-order simulation results, one entry per (circuit, observable) row.
struct SimulatedData {
  std::vector<std::int8_t> ideal;
  std::vector<double> value;
  std::uint64_t shots = 0;
  nlohmann::json meta;
};

/// Simulates every circuit (in parallel, one RNG stream per circuit) and adds shot noise:
/// dense draws N bitstrings from the exact outcome distribution; taylor perturbs each
/// value by a Gaussian of variance (1 - <Q>^2)/N. Values are clipped to [-1, 1]; the
/// single-circuit functions above return unclipped results.
SimulatedData simulate_design(const ExperimentDesign& design, const ErrorModel& model,
                              const RateVector& rates, const SimulatorConfig& config);

/// Shot noise for already computed noiseless values of one design (taylor-style Gaussian
/// noise); stream per circuit from `seed`. Values are clipped to [-1, 1].
std::vector<double> add_gaussian_shot_noise(std::span<const double> exact,
                                            std::size_t observables_per_circuit,
                                            std::uint64_t shots, std::uint64_t seed);

/// Empirical <Z^z> for every z from N bitstrings drawn from the distribution with exact
/// Z expectations `z_expectations` (length 2^n).
std::vector<double> sample_z_expectations(std::span<const double> z_expectations,
                                          std::uint64_t shots, Rng& rng);

}  // namespace lgst
