#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace lgst {

/// One gate in a layer: a registered gate name and its target qubits.
struct GateApplication {
  std::string gate;
  std::vector<std::size_t> targets;

  bool operator==(const GateApplication&) const = default;
};

using Layer = std::vector<GateApplication>;

/// A Clifford circuit over n qubits. The prep and meas pseudo-layers are implicit:
/// they are inserted by propagation/simulation, never stored here.
class Circuit {
 public:
  Circuit() = default;
  /// Validates targets (range, disjointness per layer) and that every gate is registered.
  Circuit(std::size_t num_qubits, std::vector<Layer> layers);

  std::size_t num_qubits() const noexcept { return n_; }
  std::size_t depth() const noexcept { return layers_.size(); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  /// Stable 16-hex-digit FNV-1a hash of the canonical JSON serialization.
  std::string id() const;

  bool operator==(const Circuit&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<Layer> layers_;
};

/// {n, layers: [[{gate, targets}]]}
nlohmann::json to_json(const Circuit& c);
Circuit circuit_from_json(const nlohmann::json& j);

/// 64-bit FNV-1a of a byte string, as used for every content id in the file formats.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace lgst
