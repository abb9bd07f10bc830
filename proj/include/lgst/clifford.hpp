#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lgst/pauli.hpp"

namespace lgst {

/// Symplectic tableau of an n-qubit Clifford unitary U: the signed images U X_j U^dag and
/// U Z_j U^dag for every qubit j.
class CliffordTableau {
 public:
  CliffordTableau() = default;
  /// Identity on `num_qubits` qubits.
  explicit CliffordTableau(std::size_t num_qubits);

  /// Validates that the images are Hermitian and satisfy the Pauli commutation relations.
  static CliffordTableau from_images(std::vector<PauliString> x_images,
                                     std::vector<PauliString> z_images);

  /// Trusted construction for images already known to be a valid tableau.
  static CliffordTableau from_images_unchecked(std::vector<PauliString> x_images,
                                               std::vector<PauliString> z_images);

  /// A registered gate embedded in `num_qubits` qubits. See `gate_arity`.
  static CliffordTableau gate(std::string_view name, std::size_t num_qubits,
                              std::span<const std::size_t> targets);

  std::size_t num_qubits() const noexcept { return x_images_.size(); }
  const PauliString& x_image(std::size_t q) const { return x_images_.at(q); }
  const PauliString& z_image(std::size_t q) const { return z_images_.at(q); }

  /// U p U^dag, phase-exact. Non-Hermitian inputs are allowed (the phase rides along).
  /// Throws DimensionError on size mismatch.
  PauliString conjugate(const PauliString& p) const;

  /// Tableau of U^dag.
  CliffordTableau inverse() const;

  bool is_identity() const;
  bool operator==(const CliffordTableau&) const = default;

 private:
  std::vector<PauliString> x_images_;
  std::vector<PauliString> z_images_;
};

/// Tableau of outer * inner (inner acts first).
CliffordTableau compose(const CliffordTableau& outer, const CliffordTableau& inner);

/// U p U^dag; throws DimensionError on size mismatch.
PauliString conjugate(const CliffordTableau& t, const PauliString& p);

/// Number of targets of a registered Clifford gate, or 0 when the name is unknown.
///
/// Registered gates: idle, x, y, z, h, s, sdg, x90, y90, z90 (rotations exp(-i pi/4 A)),
/// cz, cx (control first), and the identity pseudo-gates prep and meas (arity 0).
int gate_arity(std::string_view name);
bool is_known_gate(std::string_view name);

}  // namespace lgst
