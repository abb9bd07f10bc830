#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lgst/circuit.hpp"
#include "lgst/clifford.hpp"
#include "lgst/error_model.hpp"
#include "lgst/pauli.hpp"
#include "lgst/stabilizer.hpp"

namespace lgst {

/// One error generator of one layer occurrence, moved to the end of the circuit:
/// U_suffix P U_suffix^dag = sign * label_out.
struct PropagatedGenerator {
  std::size_t source_param = 0;
  GeneratorKind kind = GeneratorKind::H;
  PauliString label_out;  // unsigned
  int sign = 1;           // gamma(U_suffix, P); always +1 for S
  /// Position in the padded layer list: 0 = prep, 1..depth = circuit layers,
  /// depth + 1 = meas.
  std::size_t layer = 0;
  /// U^dag label_out U for the whole circuit U, so expectations in U|0> become
  /// expectations in |0>: <psi|B|psi> is nonzero only when the pulled-back B is Z-type.
  PauliString pulled_back;
};

struct PropagatedCircuit {
  std::size_t num_qubits = 0;
  std::size_t depth = 0;
  std::vector<PropagatedGenerator> generators;  // meas layer first, prep layer last
  CliffordTableau unitary;                      // whole circuit
  CliffordTableau unitary_inverse;
  StabilizerState state;                        // U|0...0>
};

/// Single backward sweep keeping the suffix tableau. Throws ModelError when a gate in the
/// circuit has no entry in the model, DimensionError on a qubit-count mismatch.
PropagatedCircuit propagate_all(const Circuit& circuit, const ErrorModel& model);

/// Per-layer Clifford tableaus of a circuit (no prep/meas entries).
std::vector<CliffordTableau> layer_tableaus(const Circuit& circuit);
CliffordTableau circuit_tableau(const Circuit& circuit);

/// Tr[Q H_P(|psi><psi|)] with H_P(rho) = -i[P, rho]; in {-2, 0, 2}.
double h_trace(const PauliString& q, const PauliString& p, const StabilizerState& psi);
/// Tr[Q S_P(|psi><psi|)] with S_P(rho) = P rho P - rho; in {-2, 0, 2}.
double s_trace(const PauliString& q, const PauliString& p, const StabilizerState& psi);

struct SensitivityRow {
  std::string circuit_id;
  PauliString observable;
  int ideal = 0;  // <Q> of the ideal circuit
  GeneratorKind row_kind = GeneratorKind::H;
  std::vector<std::pair<std::size_t, double>> entries;  // sorted by parameter, nonzero only
};

/// First-order sensitivity of <Q> to every model parameter. Q must be Z-type with weight
/// >= 1 (DesignError otherwise).
SensitivityRow sensitivity_row(const Circuit& circuit, const PauliString& q,
                               const ErrorModel& model);

/// Reuses one propagation for many observables. `scratch` must hold num_parameters zeros
/// and is left zeroed on return.
SensitivityRow sensitivity_row(const PropagatedCircuit& pc, const PauliString& q,
                               std::vector<double>& scratch);

}  // namespace lgst
