#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lgst/circuit.hpp"
#include "lgst/error_model.hpp"
#include "lgst/pauli.hpp"
#include "lgst/random.hpp"

namespace lgst {

/// Layer sampler "ring-matching": each layer visits the edges in random order and adds a
/// two-qubit gate on an edge with probability p_two_qubit when both ends are still free;
/// every other qubit gets a uniformly chosen single-qubit gate. "idle" is only emitted as
/// a gate when emit_idle is set (models without an idle gate treat it as "no gate").
struct GateSet {
  std::vector<std::string> one_qubit{"x90", "y90", "z90", "idle"};
  std::string two_qubit = "cz";
  double p_two_qubit = 0.25;
  bool emit_idle = false;

  nlohmann::json to_json() const;
  static GateSet from_json(const nlohmann::json& j);
};

/// The gate set a model supports: its single-qubit gate names plus "idle", and the edges
/// of its two-qubit gate. emit_idle is set when the model defines idle gates.
GateSet gate_set_for(const ErrorModel& model, std::vector<Edge>* edges = nullptr);

Circuit sample_random_circuit(std::size_t num_qubits, std::size_t depth,
                              std::span<const Edge> edges, const GateSet& gates, Rng& rng);

/// All Z-type Paulis of weight 1..w in canonical order. Throws DesignError unless
/// 1 <= w <= n.
std::vector<PauliString> enumerate_observables(std::size_t num_qubits, std::size_t max_weight);

/// Circuits plus the observables measured on every circuit.
struct ExperimentDesign {
  std::size_t num_qubits = 0;
  std::size_t max_weight = 0;
  std::size_t depth = 0;
  GateSet gates;
  std::vector<Edge> edges;
  std::uint64_t seed = 0;
  std::vector<Circuit> circuits;
  std::vector<PauliString> observables;

  std::size_t num_rows() const noexcept { return circuits.size() * observables.size(); }
  /// Design over the selected circuits, same observables.
  ExperimentDesign subset(std::span<const std::size_t> circuit_indices) const;
};

/// Circuit i is sampled from its own stream derive_seed(seed, i), so a design with K
/// circuits is a prefix of every larger design with the same seed.
ExperimentDesign generate_design(std::size_t num_qubits, std::size_t depth,
                                 std::size_t num_circuits, std::size_t max_weight,
                                 std::span<const Edge> edges, const GateSet& gates,
                                 std::uint64_t seed);
/// Appends circuits up to `num_circuits` in total.
void extend_design(ExperimentDesign& design, std::size_t num_circuits);

nlohmann::json design_to_json(const ExperimentDesign& design);
ExperimentDesign design_from_json(const nlohmann::json& j);

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

/// Stacked sensitivity rows. Row r belongs to circuit circuit_index[r] and observable
/// observable_index[r]; rows with ideal == 0 are Hamiltonian rows, the rest stochastic.
struct DesignMatrix {
  SparseRowMatrix matrix;
  std::vector<std::uint32_t> circuit_index;
  std::vector<std::uint32_t> observable_index;
  std::vector<std::int8_t> ideal;
  std::vector<GeneratorKind> column_kind;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(matrix.cols()); }
  GeneratorKind row_kind(std::size_t r) const {
    return ideal[r] == 0 ? GeneratorKind::H : GeneratorKind::S;
  }
  std::vector<std::size_t> rows_of_kind(GeneratorKind kind) const;
  std::vector<std::size_t> columns_of_kind(GeneratorKind kind) const;

  /// Submatrix over the given rows and columns (in the given order).
  SparseRowMatrix block(std::span<const std::size_t> rows,
                        std::span<const std::size_t> cols) const;
  /// Keeps the rows whose circuit is selected; circuit indices are renumbered to the
  /// position in `circuits`.
  DesignMatrix select_circuits(std::span<const std::size_t> circuits) const;
  /// Keeps a subset of columns.
  DesignMatrix select_columns(std::span<const std::size_t> cols) const;
};

/// Builds D row by row (circuit-major, observables in design order). Parallel over
/// circuits; the result does not depend on the thread count.
DesignMatrix build_design(const ExperimentDesign& design, const ErrorModel& model);

/// Rank threshold: singular values <= max(rows, cols) * sigma_max * 2^-40 count as zero.
double rank_tolerance(std::size_t rows, std::size_t cols, double sigma_max);

struct BlockRank {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t rank = 0;
  double sigma_max = 0.0;
  double sigma_min_nonzero = 0.0;
  /// sigma_max / sigma_min over all cols singular values (inf when deficient).
  double condition = 0.0;
  std::vector<double> singular_values;  // descending, length min(rows, cols)
};

struct RankReport {
  std::size_t num_params = 0;
  std::size_t num_rows = 0;
  BlockRank hamiltonian;  // H rows x H columns
  BlockRank stochastic;   // S rows x S columns
  std::size_t rank = 0;   // joint = sum of the two blocks
  double condition = 0.0;
  double rank_ratio() const { return num_params ? double(rank) / double(num_params) : 1.0; }
  bool full_rank() const { return rank == num_params; }
  nlohmann::json to_json() const;
};

/// Singular values of a dense matrix via QR (tall case) followed by SVD of R.
BlockRank block_rank(const Eigen::MatrixXd& a);
RankReport rank_report(const DesignMatrix& d);

/// Incremental rank tracking: keeps the R factor of everything seen so far.
class RankAccumulator {
 public:
  explicit RankAccumulator(std::size_t cols);
  void add_rows(const Eigen::MatrixXd& rows);
  std::size_t rank() const;
  std::size_t rows_seen() const noexcept { return rows_seen_; }

 private:
  std::size_t cols_;
  std::size_t rows_seen_ = 0;
  Eigen::MatrixXd r_;  // upper-triangular, at most cols x cols
};

struct GrowResult {
  ExperimentDesign design;
  std::size_t rank = 0;
  std::size_t num_params = 0;
  bool full_rank = false;
  /// (circuits, joint rank) after every batch.
  std::vector<std::pair<std::size_t, std::size_t>> history;
};

/// Adds `batch` circuits at a time until D is full rank or `max_circuits` is reached.
/// The starting design may be empty (its parameters supply seed, gate set, observables).
GrowResult grow_until_full_rank(const ErrorModel& model, ExperimentDesign start,
                                std::size_t batch, std::size_t max_circuits);

}  // namespace lgst
