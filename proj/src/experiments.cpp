#include "lgst/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lgst/circuit.hpp"
#include "lgst/dataset_io.hpp"
#include "lgst/design_io.hpp"
#include "lgst/errors.hpp"
#include "lgst/model_io.hpp"

namespace lgst {

const char* error_class_name(std::size_t c) {
  static const char* names[] = {"H weight-1", "H weight-2", "S weight-1", "S weight-2"};
  if (c >= kNumErrorClasses) throw DimensionError("error class out of range");
  return names[c];
}

std::size_t error_class(const ErrorModel& model, std::size_t param) {
  const auto& p = model.parameter(param);
  const std::size_t heavy = p.label.weight() >= 2 ? 1 : 0;
  return (p.kind == GeneratorKind::H ? 0 : 2) + heavy;
}

nlohmann::json PaperDatasetConfig::to_json() const {
  return {{"num_qubits", num_qubits}, {"depth", depth},          {"circuits", circuits},
          {"max_weight", max_weight}, {"model_seed", model_seed}, {"design_seed", design_seed},
          {"scale", scale},           {"backend", backend == Backend::dense ? "dense" : "taylor"},
          {"order", order}};
}

PaperDataset make_paper_dataset(const PaperDatasetConfig& config,
                                const std::optional<std::filesystem::path>& cache_dir) {
  PaperDataset out;
  out.config = config;
  const auto edges = ring_edges(config.num_qubits);
  out.gm = build_paper_model(config.num_qubits, edges, config.model_seed, config.scale);
  out.design = generate_design(config.num_qubits, config.depth, config.circuits,
                               config.max_weight, edges, gate_set_for(out.gm.model),
                               config.design_seed);
  out.ref = hex64(fnv1a64(config.to_json().dump() + model_ref(out.gm.model)));

  std::filesystem::path dir;
  if (cache_dir) dir = *cache_dir / out.ref;
  const auto matrix_file = dir / "design_matrix.bin";
  const auto values_file = dir / "values.csv";

  bool have_matrix = false;
  if (cache_dir && std::filesystem::exists(matrix_file)) {
    try {
      out.d = load_design_matrix(matrix_file);
      have_matrix = out.d.rows() == out.design.num_rows() && out.d.cols() == out.gm.model.num_parameters();
    } catch (const FormatError&) {
      have_matrix = false;
    }
  }
  if (!have_matrix) {
    out.d = build_design(out.design, out.gm.model);
    if (cache_dir) save_design_matrix(matrix_file, out.d);
  }

  bool have_values = false;
  if (cache_dir && std::filesystem::exists(values_file)) {
    try {
      const Dataset ds = load_dataset(values_file);
      if (ds.rows.size() == out.design.num_rows()) {
        have_values = true;
        out.exact.resize(ds.rows.size());
        const std::size_t m = out.design.observables.size();
        for (std::size_t r = 0; r < ds.rows.size() && have_values; ++r) {
          have_values = ds.rows[r].circuit_id == out.design.circuits[r / m].id() &&
                        ds.rows[r].observable == out.design.observables[r % m] &&
                        ds.rows[r].ideal == out.d.ideal[r];
          out.exact[r] = ds.rows[r].value;
        }
      }
    } catch (const FormatError&) {
      have_values = false;
    }
  }
  if (!have_values) {
    SimulatorConfig sim;
    sim.backend = config.backend;
    sim.order = config.order;
    sim.dense_max_qubits = std::max<std::size_t>(sim.dense_max_qubits, config.num_qubits);
    const SimulatedData data = simulate_design(out.design, out.gm.model, out.gm.rates, sim);
    out.exact = data.value;
    if (cache_dir) save_dataset(values_file, make_dataset(out.design, data), out.ref);
  }
  return out;
}

std::vector<double> noisy_values(const PaperDataset& data, std::uint64_t shots, std::uint64_t seed) {
  if (shots == 0) return data.exact;
  return add_gaussian_shot_noise(data.exact, data.design.observables.size(), shots, seed);
}

Eigen::VectorXd to_delta(const DesignMatrix& d, std::span<const double> values) {
  if (values.size() != d.rows()) throw DimensionError("to_delta: size mismatch");
  Eigen::VectorXd delta(static_cast<Eigen::Index>(values.size()));
  for (std::size_t r = 0; r < values.size(); ++r) {
    delta(static_cast<Eigen::Index>(r)) = values[r] - d.ideal[r];
  }
  return delta;
}

Eigen::VectorXd truth_vector(const RateVector& rates) {
  return Eigen::Map<const Eigen::VectorXd>(rates.values.data(),
                                           static_cast<Eigen::Index>(rates.size()));
}

namespace {

FitOptions normal_route() {
  FitOptions opts;
  opts.route = SolveRoute::normal;
  return opts;
}

std::string shots_text(std::uint64_t shots) {
  return shots == 0 ? std::string("inf") : std::to_string(shots);
}

AccuracySummary summarize(const ErrorModel& model, const Eigen::VectorXd& truth,
                          const Eigen::VectorXd& estimate, double h_threshold,
                          double s_threshold) {
  AccuracySummary s;
  std::array<std::vector<double>, 2> err, mag;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    const std::size_t k = model.kind(static_cast<std::size_t>(i)) == GeneratorKind::H ? 0 : 1;
    err[k].push_back(std::abs(estimate(i) - truth(i)));
    mag[k].push_back(std::abs(truth(i)));
  }
  for (std::size_t k = 0; k < 2; ++k) {
    s.median_abs_error[k] = median_of(err[k]);
    s.mean_abs_truth[k] = mean_of(mag[k]);
    const double thr = k == 0 ? h_threshold : s_threshold;
    const auto below = std::count_if(err[k].begin(), err[k].end(), [&](double e) { return e < thr; });
    s.fraction_below[k] = err[k].empty() ? 1.0 : double(below) / double(err[k].size());
  }
  return s;
}

std::vector<std::string> parameter_fields(const ErrorModel& model, std::size_t i) {
  const auto& p = model.parameter(i);
  return {std::to_string(i), model.gates()[p.gate].id, std::string(1, kind_char(p.kind)),
          p.label.label()};
}

}  // namespace

nlohmann::json AccuracySummary::to_json() const {
  nlohmann::json j;
  const char* kinds[] = {"H", "S"};
  for (std::size_t k = 0; k < 2; ++k) {
    j[kinds[k]] = {{"median_abs_error", median_abs_error[k]},
                   {"mean_abs_truth", mean_abs_truth[k]},
                   {"median_over_mean", mean_abs_truth[k] > 0 ? median_abs_error[k] / mean_abs_truth[k] : 0.0},
                   {"fraction_below_threshold", fraction_below[k]}};
  }
  return j;
}

Fig2Result run_fig2(const PaperDataset& data, const Fig2Config& config) {
  Fig2Result r;
  r.truth = truth_vector(data.gm.rates);
  const auto opts = normal_route();
  const FitResult exact = fit_rates(data.d, to_delta(data.d, data.exact), opts);
  const FitResult noisy =
      fit_rates(data.d, to_delta(data.d, noisy_values(data, config.shots, config.noise_seed)), opts);
  r.estimate_exact = exact.rates;
  r.estimate_noisy = noisy.rates;
  r.converged = exact.converged() && noisy.converged();
  r.max_kkt = std::max(exact.stochastic.kkt_residual, noisy.stochastic.kkt_residual);
  r.exact = summarize(data.gm.model, r.truth, r.estimate_exact, config.h_threshold, config.s_threshold);
  r.noisy = summarize(data.gm.model, r.truth, r.estimate_noisy, config.h_threshold, config.s_threshold);
  r.rank = rank_report(data.d);
  return r;
}

void write_fig2(const PaperDataset& data, const Fig2Config& config, const Fig2Result& result,
                const std::filesystem::path& out_dir, const RunManifest& manifest) {
  const std::string hash = manifest.hash();
  const auto& model = data.gm.model;
  std::vector<std::vector<std::string>> rows;
  std::array<ScatterSeries, 2> exact_series{ScatterSeries{"H", {}, {}}, ScatterSeries{"S", {}, {}}};
  std::array<ScatterSeries, 2> noisy_series = exact_series;
  std::array<std::vector<double>, 2> exact_err, noisy_err;
  for (std::size_t i = 0; i < model.num_parameters(); ++i) {
    auto row = parameter_fields(model, i);
    const auto ii = static_cast<Eigen::Index>(i);
    row.push_back(format_double(result.truth(ii)));
    row.push_back(format_double(result.estimate_exact(ii)));
    row.push_back(format_double(result.estimate_noisy(ii)));
    rows.push_back(std::move(row));
    const std::size_t k = model.kind(i) == GeneratorKind::H ? 0 : 1;
    exact_series[k].x.push_back(result.truth(ii));
    exact_series[k].y.push_back(result.estimate_exact(ii));
    noisy_series[k].x.push_back(result.truth(ii));
    noisy_series[k].y.push_back(result.estimate_noisy(ii));
    exact_err[k].push_back(result.estimate_exact(ii) - result.truth(ii));
    noisy_err[k].push_back(result.estimate_noisy(ii) - result.truth(ii));
  }
  const std::string n_text = "N=" + shots_text(config.shots);
  write_csv(out_dir / "fig2_estimates.csv", hash,
            {"param", "gate", "kind", "pauli", "truth", "estimate_inf", "estimate_" + shots_text(config.shots)},
            rows);
  write_scatter_svg(out_dir / "fig2_scatter_inf.svg", hash, "estimated vs true rates, N=inf",
                    "true rate", "estimated rate", {exact_series[0], exact_series[1]}, true);
  write_scatter_svg(out_dir / "fig2_scatter_shots.svg", hash, "estimated vs true rates, " + n_text,
                    "true rate", "estimated rate", {noisy_series[0], noisy_series[1]}, true);
  write_histogram_svg(out_dir / "fig2_hist_h_inf.svg", hash, "H estimation error, N=inf",
                      "estimate - truth", exact_err[0]);
  write_histogram_svg(out_dir / "fig2_hist_s_inf.svg", hash, "S estimation error, N=inf",
                      "estimate - truth", exact_err[1]);
  write_histogram_svg(out_dir / "fig2_hist_h_shots.svg", hash, "H estimation error, " + n_text,
                      "estimate - truth", noisy_err[0]);
  write_histogram_svg(out_dir / "fig2_hist_s_shots.svg", hash, "S estimation error, " + n_text,
                      "estimate - truth", noisy_err[1]);
  write_json(out_dir / "fig2_summary.json", hash,
             {{"dataset", data.config.to_json()},
              {"dataset_ref", data.ref},
              {"shots", config.shots},
              {"thresholds", {{"H", config.h_threshold}, {"S", config.s_threshold}}},
              {"exact", result.exact.to_json()},
              {"noisy", result.noisy.to_json()},
              {"rank", result.rank.to_json()},
              {"converged", result.converged},
              {"max_kkt_residual", result.max_kkt},
              {"run", manifest.to_json()}});
}

const Fig3Point* Fig3Result::find(std::size_t circuits, std::uint64_t shots) const {
  for (const auto& p : points) {
    if (p.circuits == circuits && p.shots == shots) return &p;
  }
  return nullptr;
}

Fig3Result run_fig3(const PaperDataset& data, const Fig3Config& config) {
  const std::size_t total = data.design.circuits.size();
  std::vector<std::size_t> counts = config.circuit_counts;
  if (counts.empty()) {
    for (std::size_t i = 1; i <= 10; ++i) counts.push_back(std::max<std::size_t>(1, total * i / 10));
  }
  for (auto c : counts) {
    if (c == 0 || c > total) throw DesignError("circuit count " + std::to_string(c) + " outside 1.." + std::to_string(total));
  }
  const auto& model = data.gm.model;
  const Eigen::VectorXd truth = truth_vector(data.gm.rates);
  std::vector<std::size_t> cls(model.num_parameters());
  std::array<std::vector<double>, kNumErrorClasses> mags;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    cls[i] = error_class(model, i);
    mags[cls[i]].push_back(std::abs(truth(static_cast<Eigen::Index>(i))));
  }
  Fig3Result result;
  for (std::size_t c = 0; c < kNumErrorClasses; ++c) result.reference[c] = mean_of(mags[c]);

  const std::size_t m = data.design.observables.size();
  const auto opts = normal_route();
  for (std::size_t si = 0; si < config.shots.size(); ++si) {
    const std::uint64_t shots = config.shots[si];
    const Eigen::VectorXd delta = to_delta(data.d, noisy_values(data, shots, derive_seed(config.seed, shots)));
    for (std::size_t count : counts) {
      const std::size_t subsets = count == total ? 1 : std::max<std::size_t>(config.subsets, 1);
      std::vector<std::array<double, kNumErrorClasses>> per(subsets);
      std::vector<char> ok(subsets, 1);
      std::vector<double> kkt(subsets, 0.0);
      std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
      for (std::size_t s = 0; s < subsets; ++s) {
        try {
          // Same subsets for every shot count.
          Rng rng(derive_seed(derive_seed(config.seed, count), s));
          std::vector<std::size_t> pick(total);
          std::iota(pick.begin(), pick.end(), 0);
          if (count < total) {
            shuffle(std::span<std::size_t>(pick), rng);
            pick.resize(count);
            std::sort(pick.begin(), pick.end());
          }
          const DesignMatrix sub = data.d.select_circuits(pick);
          Eigen::VectorXd y(static_cast<Eigen::Index>(sub.rows()));
          Eigen::Index pos = 0;
          for (auto c : pick) {
            for (std::size_t k = 0; k < m; ++k) y(pos++) = delta(static_cast<Eigen::Index>(c * m + k));
          }
          const FitResult fit = fit_rates(sub, y, opts);
          ok[s] = fit.converged();
          kkt[s] = fit.stochastic.kkt_residual;
          std::array<double, kNumErrorClasses> sum{};
          std::array<std::size_t, kNumErrorClasses> num{};
          for (std::size_t i = 0; i < cls.size(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            sum[cls[i]] += std::abs(fit.rates(ii) - truth(ii));
            ++num[cls[i]];
          }
          for (std::size_t c = 0; c < kNumErrorClasses; ++c) per[s][c] = num[c] ? sum[c] / double(num[c]) : 0.0;
        } catch (...) {
#pragma omp critical
          if (!failure) failure = std::current_exception();
        }
      }
      if (failure) std::rethrow_exception(failure);
      Fig3Point p;
      p.circuits = count;
      p.shots = shots;
      p.subsets = subsets;
      for (std::size_t c = 0; c < kNumErrorClasses; ++c) {
        std::vector<double> v(subsets);
        for (std::size_t s = 0; s < subsets; ++s) v[s] = per[s][c];
        p.mean_abs_error[c] = mean_of(v);
        double var = 0.0;
        for (double x : v) var += (x - p.mean_abs_error[c]) * (x - p.mean_abs_error[c]);
        p.band[c] = subsets > 1 ? std::sqrt(var / double(subsets - 1) / double(subsets)) : 0.0;
      }
      for (std::size_t s = 0; s < subsets; ++s) {
        result.converged = result.converged && ok[s];
        result.max_kkt = std::max(result.max_kkt, kkt[s]);
      }
      result.points.push_back(p);
    }
  }
  return result;
}

void write_fig3(const Fig3Result& result, const std::filesystem::path& out_dir,
                const RunManifest& manifest) {
  const std::string hash = manifest.hash();
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : result.points) {
    for (std::size_t c = 0; c < kNumErrorClasses; ++c) {
      rows.push_back({std::to_string(p.circuits), shots_text(p.shots), error_class_name(c),
                      std::to_string(p.subsets), format_double(p.mean_abs_error[c]),
                      format_double(p.band[c]), format_double(result.reference[c])});
    }
  }
  write_csv(out_dir / "fig3_scaling.csv", hash,
            {"circuits", "shots", "class", "subsets", "mean_abs_error", "band", "reference"}, rows);
  for (std::size_t c = 0; c < kNumErrorClasses; ++c) {
    std::vector<ScatterSeries> series;
    std::vector<std::uint64_t> seen;
    for (const auto& p : result.points) {
      if (std::find(seen.begin(), seen.end(), p.shots) == seen.end()) seen.push_back(p.shots);
    }
    for (auto shots : seen) {
      ScatterSeries s{"N=" + shots_text(shots), {}, {}};
      for (const auto& p : result.points) {
        if (p.shots != shots) continue;
        s.x.push_back(double(p.circuits) * 1.0);
        s.y.push_back(p.mean_abs_error[c]);
      }
      series.push_back(std::move(s));
    }
    series.push_back({"mean |rate|", {}, {}});
    for (const auto& p : result.points) {
      series.back().x.push_back(double(p.circuits));
      series.back().y.push_back(result.reference[c]);
    }
    write_scatter_svg(out_dir / ("fig3_class" + std::to_string(c + 1) + ".svg"), hash,
                      std::string("mean |estimate - truth|, ") + error_class_name(c), "circuits",
                      "mean absolute error", series, false, true);
  }
  nlohmann::json ref = nlohmann::json::object();
  for (std::size_t c = 0; c < kNumErrorClasses; ++c) ref[error_class_name(c)] = result.reference[c];
  write_json(out_dir / "fig3_summary.json", hash,
             {{"reference", ref}, {"converged", result.converged},
              {"max_kkt_residual", result.max_kkt}, {"run", manifest.to_json()}});
}

Fig4Result run_fig4(const PaperDataset& data, const Fig4Config& config) {
  const auto& model = data.gm.model;
  const std::size_t kappa = model.num_parameters();
  std::vector<double> etas = config.etas;
  if (etas.empty()) etas = {1.0 / double(kappa), 0.25, 0.5, 0.75, 1.0};
  const Eigen::VectorXd truth = truth_vector(data.gm.rates);
  const Eigen::VectorXd delta = to_delta(data.d, noisy_values(data, config.shots, config.noise_seed));
  Fig4Result result;
  result.reference = truth.cwiseAbs().mean();
  const auto opts = normal_route();
  for (std::size_t e = 0; e < etas.size(); ++e) {
    const double eta = etas[e];
    if (!(eta > 0.0 && eta <= 1.0)) throw DesignError("eta must lie in (0, 1]");
    Fig4Point p;
    p.eta = eta;
    p.params = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(eta * double(kappa))), 1, kappa);
    p.models = p.params == kappa ? 1 : std::max<std::size_t>(config.models, 1);
    std::vector<std::vector<double>> errors(p.models);
    std::vector<char> ok(p.models, 1);
    std::vector<double> kkt(p.models, 0.0);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < p.models; ++i) {
      try {
        Rng rng(derive_seed(derive_seed(config.seed, e), i));
        std::vector<std::size_t> keep(kappa);
        std::iota(keep.begin(), keep.end(), 0);
        if (p.params < kappa) {
          shuffle(std::span<std::size_t>(keep), rng);
          keep.resize(p.params);
          std::sort(keep.begin(), keep.end());
        }
        const FitResult fit = fit_rates(data.d.select_columns(keep), delta, opts);
        ok[i] = fit.converged();
        kkt[i] = fit.stochastic.kkt_residual;
        for (std::size_t j = 0; j < keep.size(); ++j) {
          errors[i].push_back(std::abs(fit.rates(static_cast<Eigen::Index>(j)) -
                                       truth(static_cast<Eigen::Index>(keep[j]))));
        }
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    for (std::size_t i = 0; i < p.models; ++i) {
      p.abs_errors.insert(p.abs_errors.end(), errors[i].begin(), errors[i].end());
      result.converged = result.converged && ok[i];
      result.max_kkt = std::max(result.max_kkt, kkt[i]);
    }
    p.box = box_stats(p.abs_errors);
    result.points.push_back(std::move(p));
  }
  return result;
}

void write_fig4(const Fig4Result& result, const std::filesystem::path& out_dir,
                const RunManifest& manifest) {
  const std::string hash = manifest.hash();
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> labels;
  std::vector<BoxStats> boxes;
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : result.points) {
    const auto& b = p.box;
    rows.push_back({format_double(p.eta), std::to_string(p.params), std::to_string(p.models),
                    std::to_string(b.count), format_double(b.min), format_double(b.q1),
                    format_double(b.median), format_double(b.q3), format_double(b.max),
                    format_double(b.mean), format_double(result.reference)});
    labels.push_back(p.params == 1 ? "1/kappa" : format_double(std::round(p.eta * 1000) / 1000));
    boxes.push_back(b);
    points.push_back({{"eta", p.eta}, {"params", p.params}, {"models", p.models}, {"box", b.to_json()}});
  }
  write_csv(out_dir / "fig4_boxes.csv", hash,
            {"eta", "params", "models", "count", "min", "q1", "median", "q3", "max", "mean", "reference"},
            rows);
  write_box_svg(out_dir / "fig4_boxes.svg", hash, "|estimate - truth| vs fraction of parameters kept",
                labels, boxes, result.reference, true);
  write_json(out_dir / "fig4_summary.json", hash,
             {{"points", points}, {"reference", result.reference}, {"converged", result.converged},
              {"max_kkt_residual", result.max_kkt}, {"run", manifest.to_json()}});
}

nlohmann::json Fig5Config::to_json() const {
  return {{"num_qubits", num_qubits}, {"depth", depth},   {"circuits", circuits},
          {"max_weight", max_weight}, {"scales", scales}, {"models", models},
          {"seed", seed},             {"design_seed", design_seed},
          {"backend", backend == Backend::dense ? "dense" : "taylor"}, {"order", order}};
}

Fig5Result run_fig5(const Fig5Config& config) {
  std::vector<double> scales = config.scales;
  if (scales.empty()) {
    for (int c = 1; c <= 18; ++c) scales.push_back(c);
  }
  const auto edges = ring_edges(config.num_qubits);
  const auto structure = build_paper_model(config.num_qubits, edges, config.seed);
  const ErrorModel& model = structure.model;
  const ExperimentDesign design =
      generate_design(config.num_qubits, config.depth, config.circuits, config.max_weight, edges,
                      gate_set_for(model), config.design_seed);
  const DesignMatrix d = build_design(design, model);
  Fig5Result result;
  result.rank = rank_report(d);
  SimulatorConfig sim;
  sim.backend = config.backend;
  sim.order = config.order;
  sim.dense_max_qubits = std::max<std::size_t>(sim.dense_max_qubits, config.num_qubits);
  const auto opts = normal_route();
  std::vector<double> medians;
  for (std::size_t ci = 0; ci < scales.size(); ++ci) {
    Fig5Point p;
    p.scale = scales[ci];
    std::vector<double> magnitudes;
    for (std::size_t m = 0; m < config.models; ++m) {
      const RateVector rates =
          sample_paper_rates(model, derive_seed(config.seed, ci * config.models + m + 1), p.scale);
      const SimulatedData data = simulate_design(design, model, rates, sim);
      const FitResult fit = fit_rates(d, to_delta(d, data.value), opts);
      result.converged = result.converged && fit.converged();
      result.max_kkt = std::max(result.max_kkt, fit.stochastic.kkt_residual);
      for (std::size_t i = 0; i < rates.size(); ++i) {
        const double err = std::abs(fit.rates(static_cast<Eigen::Index>(i)) - rates[i]);
        (model.kind(i) == GeneratorKind::H ? p.abs_errors_h : p.abs_errors_s).push_back(err);
        magnitudes.push_back(std::abs(rates[i]));
      }
    }
    std::vector<double> pooled = p.abs_errors_h;
    pooled.insert(pooled.end(), p.abs_errors_s.begin(), p.abs_errors_s.end());
    p.median_abs_error = median_of(pooled);
    p.mean_abs_rate = mean_of(magnitudes);
    p.box_h = box_stats(p.abs_errors_h);
    p.box_s = box_stats(p.abs_errors_s);
    medians.push_back(p.median_abs_error);
    result.points.push_back(std::move(p));
  }
  result.trend = spearman(scales, medians);
  return result;
}

void write_fig5(const Fig5Result& result, const std::filesystem::path& out_dir,
                const RunManifest& manifest) {
  const std::string hash = manifest.hash();
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> labels;
  std::vector<BoxStats> boxes_h, boxes_s;
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : result.points) {
    for (const auto& [kind, b] : {std::pair{"H", p.box_h}, std::pair{"S", p.box_s}}) {
      rows.push_back({format_double(p.scale), kind, std::to_string(b.count), format_double(b.min),
                      format_double(b.q1), format_double(b.median), format_double(b.q3),
                      format_double(b.max), format_double(p.median_abs_error),
                      format_double(p.mean_abs_rate)});
    }
    labels.push_back(format_double(p.scale));
    boxes_h.push_back(p.box_h);
    boxes_s.push_back(p.box_s);
    points.push_back({{"scale", p.scale},
                      {"median_abs_error", p.median_abs_error},
                      {"mean_abs_rate", p.mean_abs_rate},
                      {"relative_median", p.mean_abs_rate > 0 ? p.median_abs_error / p.mean_abs_rate : 0.0},
                      {"H", p.box_h.to_json()},
                      {"S", p.box_s.to_json()}});
  }
  write_csv(out_dir / "fig5_breakdown.csv", hash,
            {"scale", "kind", "count", "min", "q1", "median", "q3", "max", "pooled_median", "mean_abs_rate"},
            rows);
  write_box_svg(out_dir / "fig5_h.svg", hash, "H |estimate - truth| vs error scale", labels, boxes_h, -1, true);
  write_box_svg(out_dir / "fig5_s.svg", hash, "S |estimate - truth| vs error scale", labels, boxes_s, -1, true);
  write_json(out_dir / "fig5_summary.json", hash,
             {{"points", points}, {"trend_spearman", result.trend}, {"rank", result.rank.to_json()},
              {"converged", result.converged}, {"max_kkt_residual", result.max_kkt},
              {"run", manifest.to_json()}});
}

nlohmann::json Fig6Config::to_json() const {
  return {{"num_qubits", num_qubits}, {"depth", depth},         {"max_weight", max_weight},
          {"kappas", kappas},         {"instances", instances}, {"max_circuits", max_circuits},
          {"seed", seed}};
}

const char* model_class_name(RandomModelClass cls) {
  switch (cls) {
    case RandomModelClass::hamiltonian: return "H-only";
    case RandomModelClass::stochastic: return "S-only";
    case RandomModelClass::mixed: return "mixed";
  }
  return "?";
}

Fig6Result run_fig6(const Fig6Config& config) {
  const auto edges = ring_edges(config.num_qubits);
  const RandomModelClass classes[] = {RandomModelClass::hamiltonian, RandomModelClass::stochastic,
                                      RandomModelClass::mixed};
  struct Job {
    RandomModelClass cls;
    std::size_t kappa_index, instance;
  };
  std::vector<Job> jobs;
  for (std::size_t ci = 0; ci < 3; ++ci) {
    for (std::size_t k = 0; k < config.kappas.size(); ++k) {
      for (std::size_t i = 0; i < config.instances; ++i) jobs.push_back({classes[ci], k, i});
    }
  }
  Fig6Result result;
  result.instances.resize(jobs.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    try {
      const Job& job = jobs[j];
      const std::size_t kappa = config.kappas[job.kappa_index];
      const std::uint64_t pair_seed = derive_seed(derive_seed(config.seed, job.kappa_index), job.instance);
      Rng rng(derive_seed(pair_seed, static_cast<std::uint64_t>(job.cls) + 1));
      const ErrorModel model = build_random_model(config.num_qubits, edges, kappa, job.cls, rng);
      // Matched H-only and S-only instances see the same circuits.
      const auto start = generate_design(config.num_qubits, config.depth, 0, config.max_weight,
                                         edges, gate_set_for(model), pair_seed);
      const GrowResult grown = grow_until_full_rank(model, start, 1, config.max_circuits);
      Fig6Instance& out = result.instances[j];
      out.cls = job.cls;
      out.kappa = kappa;
      out.instance = job.instance;
      out.num_params = grown.num_params;
      out.circuits_to_full = grown.full_rank ? grown.design.circuits.size() : 0;
      out.final_ratio = grown.num_params ? double(grown.rank) / double(grown.num_params) : 1.0;
      for (const auto& [k, r] : grown.history) out.curve.emplace_back(k, double(r) / double(grown.num_params));
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  std::size_t pairs = 0, good = 0;
  for (const auto& a : result.instances) {
    result.all_full_rank = result.all_full_rank && a.circuits_to_full > 0;
    if (a.cls != RandomModelClass::hamiltonian) continue;
    for (const auto& b : result.instances) {
      if (b.cls == RandomModelClass::stochastic && b.kappa == a.kappa && b.instance == a.instance) {
        ++pairs;
        if (a.circuits_to_full > 0 && (b.circuits_to_full == 0 || a.circuits_to_full <= b.circuits_to_full)) ++good;
      }
    }
  }
  result.h_not_above_s_fraction = pairs ? double(good) / double(pairs) : 1.0;
  return result;
}

void write_fig6(const Fig6Result& result, const std::filesystem::path& out_dir,
                const RunManifest& manifest) {
  const std::string hash = manifest.hash();
  std::vector<std::vector<std::string>> rows, curve_rows;
  std::array<ScatterSeries, 3> series{ScatterSeries{"H-only", {}, {}}, ScatterSeries{"S-only", {}, {}},
                                      ScatterSeries{"mixed", {}, {}}};
  for (const auto& inst : result.instances) {
    rows.push_back({model_class_name(inst.cls), std::to_string(inst.kappa), std::to_string(inst.instance),
                    std::to_string(inst.num_params), std::to_string(inst.circuits_to_full),
                    format_double(inst.final_ratio)});
    for (const auto& [k, r] : inst.curve) {
      curve_rows.push_back({model_class_name(inst.cls), std::to_string(inst.kappa),
                            std::to_string(inst.instance), std::to_string(k), format_double(r)});
    }
    auto& s = series[static_cast<std::size_t>(inst.cls)];
    s.x.push_back(double(inst.kappa));
    s.y.push_back(double(inst.circuits_to_full));
  }
  write_csv(out_dir / "fig6_instances.csv", hash,
            {"class", "kappa", "instance", "num_params", "circuits_to_full_rank", "final_rank_ratio"}, rows);
  write_csv(out_dir / "fig6_curves.csv", hash, {"class", "kappa", "instance", "circuits", "rank_ratio"},
            curve_rows);
  write_scatter_svg(out_dir / "fig6_circuits_to_full_rank.svg", hash,
                    "circuits needed for rank/kappa = 1", "kappa", "circuits",
                    {series[0], series[1], series[2]}, false, true);
  write_json(out_dir / "fig6_summary.json", hash,
             {{"all_full_rank", result.all_full_rank},
              {"h_not_above_s_fraction", result.h_not_above_s_fraction},
              {"run", manifest.to_json()}});
}

}  // namespace lgst
