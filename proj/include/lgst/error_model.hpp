#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lgst/circuit.hpp"
#include "lgst/pauli.hpp"
#include "lgst/random.hpp"

namespace lgst {

/// Elementary error generator types. C and A are reserved: they parse, but no model
/// containing them is admitted.
enum class GeneratorKind : std::uint8_t { H, S, C, A };

char kind_char(GeneratorKind kind);
GeneratorKind parse_kind(std::string_view text);

/// H_P[rho] = -i[P, rho] or S_P[rho] = P rho P - rho for an unsigned, non-identity P.
struct ElementaryGenerator {
  GeneratorKind kind = GeneratorKind::H;
  PauliString label;

  bool operator==(const ElementaryGenerator&) const = default;
  /// H before S, then label order.
  std::strong_ordering operator<=>(const ElementaryGenerator& other) const;
};

/// Error generators attached to one gate (or to the prep/meas pseudo-gates).
struct GateErrorSpec {
  std::string id;     // unique, e.g. "cz_0_1", "prep"
  std::string ideal;  // registered gate name, e.g. "cz"
  std::vector<std::size_t> targets;
  std::vector<ElementaryGenerator> errors;
};

struct ModelDiagnostics {
  std::size_t num_qubits = 0;
  std::size_t kappa = 0;
  std::size_t num_hamiltonian = 0;
  std::size_t num_stochastic = 0;
  std::vector<std::string> issues;

  bool ok() const noexcept { return issues.empty(); }
};

/// Checks a model description without constructing it: duplicates, identity or signed
/// labels, label sizes, unsupported kinds, unknown ideal gates, duplicate ids.
ModelDiagnostics validate_model(std::size_t num_qubits, std::span<const GateErrorSpec> gates);

struct ParameterKey {
  std::size_t gate = 0;  // index into ErrorModel::gates()
  GeneratorKind kind = GeneratorKind::H;
  PauliString label;
};

/// Sparse per-gate error model. Gates are sorted by id and each gate's errors by
/// (kind, label), so parameter i of the rate vector is the i-th error in that order and
/// each gate owns a contiguous block of parameters.
class ErrorModel {
 public:
  ErrorModel() = default;

  /// Throws ModelError listing every violation found by validate_model.
  static ErrorModel create(std::size_t num_qubits, std::vector<GateErrorSpec> gates);

  std::size_t num_qubits() const noexcept { return n_; }
  std::size_t num_parameters() const noexcept { return params_.size(); }
  const std::vector<GateErrorSpec>& gates() const noexcept { return gates_; }
  const ParameterKey& parameter(std::size_t i) const { return params_.at(i); }
  GeneratorKind kind(std::size_t i) const { return params_.at(i).kind; }
  /// First parameter index owned by gate g; its block has gates()[g].errors.size() entries.
  std::size_t parameter_offset(std::size_t g) const { return offsets_.at(g); }

  std::optional<std::size_t> gate_index(std::string_view id) const;
  /// Gate applied as `ideal` on exactly `targets`.
  std::optional<std::size_t> find_gate(std::string_view ideal,
                                       std::span<const std::size_t> targets) const;
  std::optional<std::size_t> parameter_index(std::string_view gate_id, GeneratorKind kind,
                                             const PauliString& label) const;

  std::vector<std::size_t> hamiltonian_indices() const;
  std::vector<std::size_t> stochastic_indices() const;

  /// Submodel keeping only the listed parameters (all gates survive, possibly with no
  /// errors). Returns the model and, for each new parameter, its index in this model.
  std::pair<ErrorModel, std::vector<std::size_t>> restricted(
      std::span<const std::size_t> keep) const;

  /// Free-form JSON text describing how the model was generated (may be empty).
  const std::string& recipe() const noexcept { return recipe_; }
  void set_recipe(std::string recipe) { recipe_ = std::move(recipe); }

 private:
  std::size_t n_ = 0;
  std::vector<GateErrorSpec> gates_;
  std::vector<ParameterKey> params_;
  std::vector<std::size_t> offsets_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::string recipe_;
};

/// Gate indices (into model.gates()) for every gate in a layer.
/// Throws ModelError for a gate the model does not define.
std::vector<std::size_t> resolve_layer(const ErrorModel& model, const Layer& layer);

/// Rates for every parameter of a model, in parameter order.
struct RateVector {
  std::vector<double> values;
  std::vector<GeneratorKind> kinds;

  static RateVector zeros(const ErrorModel& model);
  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }

  /// Every S-indexed rate is >= 0 (complete positivity for H+S models).
  bool is_admissible() const;
  RateVector scaled(double c) const;
};

/// Merged Lindbladian of a layer: generators shared by several gates carry the summed
/// rate. Output is sorted by (kind, label) and independent of gate order.
std::vector<std::pair<ElementaryGenerator, double>> layer_lindbladian(const ErrorModel& model,
                                                                      const RateVector& rates,
                                                                      const Layer& layer);

using Edge = std::pair<std::size_t, std::size_t>;

/// (0,1), (1,2), ..., (n-1,0); a single edge for n = 2 and none for n = 1.
std::vector<Edge> ring_edges(std::size_t num_qubits);

/// Throws ModelError for self-loops, out-of-range or repeated edges.
void validate_edges(std::size_t num_qubits, std::span<const Edge> edges);

struct GeneratedModel {
  ErrorModel model;
  RateVector rates;
};

/// Local-plus-crosstalk model over {x90, y90, z90 on every qubit; cz on every edge}:
///  - x90/y90/z90 on q: H and S of the rotation axis on q, plus H_Z on every other qubit;
///  - cz on (q, r): H and S of Z_q, Z_r, Z_q Z_r; H_Z on every other qubit; and H of
///    Z_t Z_p for each target t and every other qubit p;
///  - prep and meas pseudo-gates: S_X on every qubit.
/// kappa = 6n^2 + 5n on a ring. Stochastic rates ~ U[0, 1e-3] and Hamiltonian rates
/// ~ U[-1e-2, 1e-2], drawn in parameter order from `seed`, then multiplied by `scale`.
GeneratedModel build_paper_model(std::size_t num_qubits, std::span<const Edge> edges,
                                 std::uint64_t seed, double scale = 1.0);

/// Redraws the rates of a paper model (same structure) from another seed.
RateVector sample_paper_rates(const ErrorModel& model, std::uint64_t seed, double scale = 1.0);

enum class RandomModelClass { hamiltonian, stochastic, mixed };

/// `kappa` generators drawn uniformly from all n-qubit H (or S, or either) generators,
/// each attached to a uniformly chosen gate of the {x90, y90, z90, cz} gate set without
/// (gate, kind, label) repeats. The mixed class also carries S_X on every qubit for both
/// prep and meas, on top of the `kappa` random generators.
ErrorModel build_random_model(std::size_t num_qubits, std::span<const Edge> edges,
                              std::size_t kappa, RandomModelClass cls, Rng& rng);

}  // namespace lgst
