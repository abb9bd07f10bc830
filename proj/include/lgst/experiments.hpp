#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lgst/design.hpp"
#include "lgst/error_model.hpp"
#include "lgst/report.hpp"
#include "lgst/simulator.hpp"
#include "lgst/solver.hpp"

namespace lgst {

// Parameter classes used by the accuracy studies.
enum class ErrorClass { h_weight1, h_weight2, s_weight1, s_weight2 };
inline constexpr std::size_t kNumErrorClasses = 4;
const char* error_class_name(std::size_t c);
/// Labels of weight > 2 fall into the weight-2 class.
std::size_t error_class(const ErrorModel& model, std::size_t param);

/// The n-qubit ring model with its simulated noiseless data, shared by the accuracy,
/// scaling, and reduced-ansatz studies.
struct PaperDatasetConfig {
  std::size_t num_qubits = 10;
  std::size_t depth = 15;
  std::size_t circuits = 1000;
  std::size_t max_weight = 2;
  std::uint64_t model_seed = 1;
  std::uint64_t design_seed = 2;
  double scale = 1.0;
  Backend backend = Backend::taylor;
  int order = 3;

  nlohmann::json to_json() const;
};

struct PaperDataset {
  PaperDatasetConfig config;
  GeneratedModel gm;
  ExperimentDesign design;
  DesignMatrix d;
  std::vector<double> exact;  // noiseless expectation per design row
  std::string ref;            // hash of config and model
};

/// Builds (or, with a cache directory, reloads) the dataset. Cached data is keyed by the
/// config hash and verified against a freshly regenerated design.
PaperDataset make_paper_dataset(const PaperDatasetConfig& config,
                                const std::optional<std::filesystem::path>& cache_dir = {});

/// Row values with Gaussian shot noise of N shots (N = 0 returns the exact values).
std::vector<double> noisy_values(const PaperDataset& data, std::uint64_t shots, std::uint64_t seed);

Eigen::VectorXd to_delta(const DesignMatrix& d, std::span<const double> values);
Eigen::VectorXd truth_vector(const RateVector& rates);

// ---- accuracy at fixed data size -------------------------------------------------------

struct Fig2Config {
  std::uint64_t shots = 1000;
  std::uint64_t noise_seed = 7;
  double h_threshold = 1e-3;
  double s_threshold = 5e-4;
};

struct AccuracySummary {
  std::array<double, 2> median_abs_error{};  // H, S
  std::array<double, 2> mean_abs_truth{};
  std::array<double, 2> fraction_below{};  // |error| below the class threshold
  nlohmann::json to_json() const;
};

struct Fig2Result {
  Eigen::VectorXd truth, estimate_exact, estimate_noisy;
  AccuracySummary exact, noisy;
  RankReport rank;
  bool converged = true;
  double max_kkt = 0.0;
};

Fig2Result run_fig2(const PaperDataset& data, const Fig2Config& config);
void write_fig2(const PaperDataset& data, const Fig2Config& config, const Fig2Result& result,
                const std::filesystem::path& out_dir, const RunManifest& manifest);

// ---- error versus circuit count and shots ----------------------------------------------

struct Fig3Config {
  std::vector<std::size_t> circuit_counts;  // empty: 10 evenly spaced counts up to K
  std::vector<std::uint64_t> shots{100, 1000, 10000, 0};
  std::size_t subsets = 500;
  std::uint64_t seed = 11;
};

struct Fig3Point {
  std::size_t circuits = 0;
  std::uint64_t shots = 0;
  std::size_t subsets = 0;
  std::array<double, kNumErrorClasses> mean_abs_error{};
  std::array<double, kNumErrorClasses> band{};  // standard error over subsets
};

struct Fig3Result {
  std::vector<Fig3Point> points;
  std::array<double, kNumErrorClasses> reference{};  // mean |truth| per class
  bool converged = true;
  double max_kkt = 0.0;
  const Fig3Point* find(std::size_t circuits, std::uint64_t shots) const;
};

Fig3Result run_fig3(const PaperDataset& data, const Fig3Config& config);
void write_fig3(const Fig3Result& result, const std::filesystem::path& out_dir,
                const RunManifest& manifest);

// ---- reduced ansatz ---------------------------------------------------------------------

struct Fig4Config {
  std::vector<double> etas;  // empty: {1/kappa, 1/4, 1/2, 3/4, 1}
  std::size_t models = 150;
  std::uint64_t seed = 13;
  std::uint64_t shots = 0;
  std::uint64_t noise_seed = 7;
};

struct Fig4Point {
  double eta = 0.0;
  std::size_t params = 0;
  std::size_t models = 0;
  std::vector<double> abs_errors;  // pooled over retained parameters and models
  BoxStats box;
};

struct Fig4Result {
  std::vector<Fig4Point> points;
  double reference = 0.0;  // mean |truth| of the data-generating model
  bool converged = true;
  double max_kkt = 0.0;
};

Fig4Result run_fig4(const PaperDataset& data, const Fig4Config& config);
void write_fig4(const Fig4Result& result, const std::filesystem::path& out_dir,
                const RunManifest& manifest);

// ---- breakdown of the linear approximation ----------------------------------------------

struct Fig5Config {
  std::size_t num_qubits = 5;
  std::size_t depth = 15;
  std::size_t circuits = 1000;
  std::size_t max_weight = 2;
  std::vector<double> scales;  // empty: 1, 2, ..., 18
  std::size_t models = 50;
  std::uint64_t seed = 17;
  std::uint64_t design_seed = 2;
  Backend backend = Backend::dense;
  int order = 3;

  nlohmann::json to_json() const;
};

struct Fig5Point {
  double scale = 1.0;
  std::vector<double> abs_errors_h, abs_errors_s;
  double median_abs_error = 0.0;  // pooled over H and S
  double mean_abs_rate = 0.0;
  BoxStats box_h, box_s;
};

struct Fig5Result {
  std::vector<Fig5Point> points;
  double trend = 0.0;  // Spearman correlation of pooled medians with the scale
  RankReport rank;
  bool converged = true;
  double max_kkt = 0.0;
};

Fig5Result run_fig5(const Fig5Config& config);
void write_fig5(const Fig5Result& result, const std::filesystem::path& out_dir,
                const RunManifest& manifest);

// ---- rank of random sparse models -------------------------------------------------------

struct Fig6Config {
  std::size_t num_qubits = 4;
  std::size_t depth = 15;
  std::size_t max_weight = 2;
  std::vector<std::size_t> kappas{20, 40, 80, 160};
  std::size_t instances = 10;
  std::size_t max_circuits = 1000;
  std::uint64_t seed = 19;

  nlohmann::json to_json() const;
};

struct Fig6Instance {
  RandomModelClass cls = RandomModelClass::hamiltonian;
  std::size_t kappa = 0;
  std::size_t instance = 0;
  std::size_t num_params = 0;
  std::size_t circuits_to_full = 0;  // 0 when never reached
  double final_ratio = 0.0;
  std::vector<std::pair<std::size_t, double>> curve;  // (circuits, rank / kappa)
};

struct Fig6Result {
  std::vector<Fig6Instance> instances;
  bool all_full_rank = true;
  double h_not_above_s_fraction = 0.0;  // matched pairs with H count <= S count
};

const char* model_class_name(RandomModelClass cls);
Fig6Result run_fig6(const Fig6Config& config);
void write_fig6(const Fig6Result& result, const std::filesystem::path& out_dir,
                const RunManifest& manifest);

}  // namespace lgst
