#pragma once

#include <cstddef>
#include <vector>

#include "lgst/clifford.hpp"
#include "lgst/pauli.hpp"

namespace lgst {

/// Result of a stabilizer-group membership query. The underlying value is the
/// expectation <psi|p|psi>.
enum class StabilizerSign : int { minus = -1, not_in_group = 0, plus = 1 };

inline int expectation(StabilizerSign s) noexcept { return static_cast<int>(s); }

/// Pure stabilizer state U|0...0>, tracked as n sign-carrying stabilizer generators plus
/// their destabilizer partners. The destabilizers make membership queries O(n) products
/// with no elimination.
class StabilizerState {
 public:
  StabilizerState() = default;
  /// |0...0>: stabilizers +Z_j, destabilizers X_j.
  explicit StabilizerState(std::size_t num_qubits);
  /// U|0...0> for the Clifford with tableau `u`.
  static StabilizerState from_unitary(const CliffordTableau& u);

  std::size_t num_qubits() const noexcept { return stabilizers_.size(); }
  const std::vector<PauliString>& stabilizers() const noexcept { return stabilizers_; }
  const std::vector<PauliString>& destabilizers() const noexcept { return destabilizers_; }

 private:
  friend StabilizerState apply_layer(const StabilizerState&, const CliffordTableau&);
  std::vector<PauliString> stabilizers_;
  std::vector<PauliString> destabilizers_;
};

/// State after applying the Clifford `t`: every generator conjugated by t.
StabilizerState apply_layer(const StabilizerState& state, const CliffordTableau& t);

/// +1/-1 if +p/-p is in the stabilizer group of `state`, not_in_group otherwise.
/// Throws PhaseError for non-Hermitian p and DimensionError on size mismatch.
StabilizerSign stabilizer_sign(const StabilizerState& state, const PauliString& p);

}  // namespace lgst
