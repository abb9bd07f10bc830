#include "lgst/propagation.hpp"

#include <algorithm>

#include "lgst/errors.hpp"

namespace lgst {

namespace {

void check_observable(const PauliString& q, std::size_t n) {
  if (q.num_qubits() != n) throw DimensionError("observable size does not match the circuit");
  if (!q.is_z_type() || q.is_identity()) {
    throw DesignError("observable " + q.str() + " must be Z-type with weight >= 1");
  }
  if (q.phase() != 0) throw DesignError("observable " + q.str() + " must be unsigned");
}

// <0|B|0> for B = i^phase * letters: the sign when B is Z-type, otherwise 0.
inline int zero_state_expectation(bool z_type, int phase) {
  if (!z_type) return 0;
  return phase == 0 ? 1 : (phase == 2 ? -1 : 0);
}

}  // namespace

std::vector<CliffordTableau> layer_tableaus(const Circuit& circuit) {
  const std::size_t n = circuit.num_qubits();
  std::vector<CliffordTableau> out;
  out.reserve(circuit.depth());
  for (const auto& layer : circuit.layers()) {
    CliffordTableau t(n);
    for (const auto& app : layer) t = compose(CliffordTableau::gate(app.gate, n, app.targets), t);
    out.push_back(std::move(t));
  }
  return out;
}

CliffordTableau circuit_tableau(const Circuit& circuit) {
  CliffordTableau u(circuit.num_qubits());
  for (const auto& t : layer_tableaus(circuit)) u = compose(t, u);
  return u;
}

PropagatedCircuit propagate_all(const Circuit& circuit, const ErrorModel& model) {
  const std::size_t n = circuit.num_qubits();
  if (model.num_qubits() != n) {
    throw DimensionError("circuit has " + std::to_string(n) + " qubits, model has " +
                         std::to_string(model.num_qubits()));
  }
  const auto prep = model.gate_index("prep");
  const auto meas = model.gate_index("meas");
  const std::size_t depth = circuit.depth();
  const auto tableaus = layer_tableaus(circuit);

  PropagatedCircuit pc;
  pc.num_qubits = n;
  pc.depth = depth;

  CliffordTableau suffix(n);
  auto emit = [&](std::size_t g, std::size_t layer) {
    const auto& errors = model.gates()[g].errors;
    const std::size_t offset = model.parameter_offset(g);
    for (std::size_t k = 0; k < errors.size(); ++k) {
      PauliString image = suffix.conjugate(errors[k].label);
      const int sign = image.sign();
      image.set_phase(0);
      PropagatedGenerator gen;
      gen.source_param = offset + k;
      gen.kind = errors[k].kind;
      gen.sign = errors[k].kind == GeneratorKind::H ? sign : 1;
      gen.label_out = std::move(image);
      gen.layer = layer;
      pc.generators.push_back(std::move(gen));
    }
  };

  if (meas) emit(*meas, depth + 1);
  for (std::size_t l = depth; l >= 1; --l) {
    for (auto g : resolve_layer(model, circuit.layers()[l - 1])) emit(g, l);
    suffix = compose(suffix, tableaus[l - 1]);
  }
  if (prep) emit(*prep, 0);

  pc.unitary = std::move(suffix);
  pc.unitary_inverse = pc.unitary.inverse();
  pc.state = StabilizerState::from_unitary(pc.unitary);
  for (auto& gen : pc.generators) gen.pulled_back = pc.unitary_inverse.conjugate(gen.label_out);
  return pc;
}

double h_trace(const PauliString& q, const PauliString& p, const StabilizerState& psi) {
  if (q.num_qubits() != p.num_qubits() || q.num_qubits() != psi.num_qubits()) {
    throw DimensionError("h_trace: size mismatch");
  }
  if (commutes(q, p)) return 0.0;
  // -i[Q,P] = -2i QP for anticommuting Q, P; -iQP is Hermitian.
  PauliString b = q * p;
  b.mul_i(3);
  return 2.0 * expectation(stabilizer_sign(psi, b));
}

double s_trace(const PauliString& q, const PauliString& p, const StabilizerState& psi) {
  if (q.num_qubits() != p.num_qubits() || q.num_qubits() != psi.num_qubits()) {
    throw DimensionError("s_trace: size mismatch");
  }
  if (commutes(q, p)) return 0.0;
  return -2.0 * expectation(stabilizer_sign(psi, q));
}

SensitivityRow sensitivity_row(const PropagatedCircuit& pc, const PauliString& q,
                               std::vector<double>& scratch) {
  check_observable(q, pc.num_qubits);
  const PauliString qt = pc.unitary_inverse.conjugate(q);
  SensitivityRow row;
  row.observable = q;
  row.ideal = zero_state_expectation(qt.is_z_type(), qt.phase());
  row.row_kind = row.ideal == 0 ? GeneratorKind::H : GeneratorKind::S;

  std::vector<std::size_t> touched;
  for (const auto& gen : pc.generators) {
    if (gen.kind != row.row_kind) continue;
    if (!anticommute_unchecked(qt, gen.pulled_back)) continue;
    double v;
    if (row.row_kind == GeneratorKind::S) {
      v = -2.0 * row.ideal;
    } else {
      if (!same_x_unchecked(qt, gen.pulled_back)) continue;
      const int e = zero_state_expectation(true, (product_phase_unchecked(qt, gen.pulled_back) + 3) & 3);
      v = 2.0 * gen.sign * e;
    }
    if (scratch[gen.source_param] == 0.0) touched.push_back(gen.source_param);
    scratch[gen.source_param] += v;
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  for (auto i : touched) {
    if (scratch[i] != 0.0) row.entries.emplace_back(i, scratch[i]);
    scratch[i] = 0.0;
  }
  return row;
}

SensitivityRow sensitivity_row(const Circuit& circuit, const PauliString& q,
                               const ErrorModel& model) {
  check_observable(q, circuit.num_qubits());
  const PropagatedCircuit pc = propagate_all(circuit, model);
  std::vector<double> scratch(model.num_parameters(), 0.0);
  SensitivityRow row = sensitivity_row(pc, q, scratch);
  row.circuit_id = circuit.id();
  return row;
}

}  // namespace lgst
