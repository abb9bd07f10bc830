#include "lgst/stabilizer.hpp"

#include "lgst/errors.hpp"

namespace lgst {

StabilizerState::StabilizerState(std::size_t num_qubits) {
  stabilizers_.reserve(num_qubits);
  destabilizers_.reserve(num_qubits);
  for (std::size_t q = 0; q < num_qubits; ++q) {
    stabilizers_.push_back(PauliString::single(num_qubits, q, 'Z'));
    destabilizers_.push_back(PauliString::single(num_qubits, q, 'X'));
  }
}

StabilizerState StabilizerState::from_unitary(const CliffordTableau& u) {
  return apply_layer(StabilizerState(u.num_qubits()), u);
}

StabilizerState apply_layer(const StabilizerState& state, const CliffordTableau& t) {
  if (state.num_qubits() != t.num_qubits()) {
    throw DimensionError("apply_layer: state and tableau sizes differ");
  }
  StabilizerState out;
  out.stabilizers_.reserve(state.num_qubits());
  out.destabilizers_.reserve(state.num_qubits());
  for (const auto& s : state.stabilizers_) out.stabilizers_.push_back(t.conjugate(s));
  for (const auto& d : state.destabilizers_) out.destabilizers_.push_back(t.conjugate(d));
  return out;
}

StabilizerSign stabilizer_sign(const StabilizerState& state, const PauliString& p) {
  const std::size_t n = state.num_qubits();
  if (p.num_qubits() != n) throw DimensionError("stabilizer_sign: size mismatch");
  if (!p.is_hermitian()) throw PhaseError("stabilizer_sign: " + p.str() + " is not Hermitian");

  const auto& stabs = state.stabilizers();
  const auto& destabs = state.destabilizers();
  for (const auto& s : stabs) {
    if (anticommute_unchecked(s, p)) return StabilizerSign::not_in_group;
  }
  // p commutes with the whole group, so p = +-prod of the stabilizers whose destabilizer
  // partner anticommutes with p.
  PauliString product(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (anticommute_unchecked(destabs[j], p)) product *= stabs[j];
  }
  return ((p.phase() - product.phase()) & 3) == 0 ? StabilizerSign::plus : StabilizerSign::minus;
}

}  // namespace lgst
