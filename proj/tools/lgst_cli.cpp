#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lgst/circuit.hpp"
#include "lgst/dataset_io.hpp"
#include "lgst/design.hpp"
#include "lgst/design_io.hpp"
#include "lgst/errors.hpp"
#include "lgst/experiments.hpp"
#include "lgst/model_io.hpp"
#include "lgst/report.hpp"
#include "lgst/simulator.hpp"
#include "lgst/solver.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNonConvergence = 3;

// Raised when a fit finishes without meeting the solver's convergence criteria.
struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string file_ref(const std::string& path) {
  return lgst::hex64(lgst::fnv1a64(lgst::read_text_file(path)));
}

lgst::Backend parse_backend(const std::string& s) {
  if (s == "dense") return lgst::Backend::dense;
  if (s == "taylor") return lgst::Backend::taylor;
  throw lgst::DesignError("unknown backend '" + s + "' (dense or taylor)");
}

void note(const std::string& msg) { std::cerr << "lgst: " << msg << "\n"; }

struct ModelGenArgs {
  std::size_t n = 10;
  std::uint64_t seed = 1;
  double scale = 1.0;
  std::string kind = "paper";
  std::size_t kappa = 10;
  std::string out = "model.json";
};

void cmd_model_gen(const ModelGenArgs& a) {
  lgst::RunManifest m;
  m.subcommand = "model-gen";
  m.seeds = {{"seed", a.seed}};
  m.config = {{"n", a.n}, {"scale", a.scale}, {"kind", a.kind}, {"kappa", a.kappa}};
  const auto edges = lgst::ring_edges(a.n);
  nlohmann::json j;
  if (a.kind == "paper") {
    const auto gm = lgst::build_paper_model(a.n, edges, a.seed, a.scale);
    j = lgst::model_to_json(gm.model, &gm.rates);
  } else {
    lgst::RandomModelClass cls;
    if (a.kind == "h") cls = lgst::RandomModelClass::hamiltonian;
    else if (a.kind == "s") cls = lgst::RandomModelClass::stochastic;
    else if (a.kind == "mixed") cls = lgst::RandomModelClass::mixed;
    else throw lgst::ModelError("unknown model kind '" + a.kind + "' (paper, h, s, mixed)");
    lgst::Rng rng(a.seed);
    const auto model = lgst::build_random_model(a.n, edges, a.kappa, cls, rng);
    const auto rates = lgst::sample_paper_rates(model, lgst::derive_seed(a.seed, 1), a.scale);
    j = lgst::model_to_json(model, &rates);
  }
  lgst::write_json(a.out, m.hash(), j);
  std::cout << "wrote " << a.out << " (" << j["gates"].size() << " gates)\n";
}

struct DesignGenArgs {
  std::string model;
  std::size_t depth = 15;
  std::size_t circuits = 1000;
  std::size_t weight = 2;
  std::uint64_t seed = 2;
  bool grow = false;
  std::size_t batch = 10;
  std::size_t max_circuits = 5000;
  std::string out = "design.json";
  std::string matrix;
};

void cmd_design_gen(const DesignGenArgs& a) {
  const auto loaded = lgst::load_model(a.model);
  lgst::RunManifest m;
  m.subcommand = "design-gen";
  m.inputs = {{"model", file_ref(a.model)}};
  m.seeds = {{"seed", a.seed}};
  m.config = {{"depth", a.depth}, {"circuits", a.circuits}, {"weight", a.weight}, {"grow", a.grow},
              {"batch", a.batch}, {"max_circuits", a.max_circuits}};
  std::vector<lgst::Edge> edges;
  const auto gates = lgst::gate_set_for(loaded.model, &edges);
  const std::size_t n = loaded.model.num_qubits();
  lgst::ExperimentDesign design;
  if (a.grow) {
    const auto start = lgst::generate_design(n, a.depth, 0, a.weight, edges, gates, a.seed);
    const auto grown = lgst::grow_until_full_rank(loaded.model, start, a.batch, a.max_circuits);
    design = grown.design;
    if (!grown.full_rank) {
      note("design not full rank after " + std::to_string(design.circuits.size()) + " circuits (rank " +
           std::to_string(grown.rank) + " of " + std::to_string(grown.num_params) + ")");
    }
  } else {
    design = lgst::generate_design(n, a.depth, a.circuits, a.weight, edges, gates, a.seed);
  }
  auto j = lgst::design_to_json(design);
  lgst::write_json(a.out, m.hash(), j);
  if (!a.matrix.empty()) lgst::save_design_matrix(a.matrix, lgst::build_design(design, loaded.model));
  std::cout << "wrote " << a.out << " (" << design.circuits.size() << " circuits, "
            << design.observables.size() << " observables)\n";
}

struct SimulateArgs {
  std::string model, design, backend = "auto", out = "data.csv";
  int k = 3;
  std::uint64_t shots = 0, seed = 3;
  std::size_t dense_max = 5;
};

void cmd_simulate(const SimulateArgs& a) {
  const auto loaded = lgst::load_model(a.model);
  if (!loaded.rates) throw lgst::ModelError("model file has no rates to simulate");
  const auto design = lgst::load_design(a.design);
  auto cfg = lgst::default_simulator(design.num_qubits);
  if (a.backend != "auto") cfg.backend = parse_backend(a.backend);
  cfg.order = a.k;
  cfg.shots = a.shots;
  cfg.seed = a.seed;
  cfg.dense_max_qubits = std::max(cfg.dense_max_qubits, a.dense_max);
  lgst::RunManifest m;
  m.subcommand = "simulate";
  m.inputs = {{"model", file_ref(a.model)}, {"design", file_ref(a.design)}};
  m.seeds = {{"seed", a.seed}};
  m.config = {{"backend", cfg.backend == lgst::Backend::dense ? "dense" : "taylor"},
              {"k", a.k}, {"shots", a.shots}};
  const auto data = lgst::simulate_design(design, loaded.model, *loaded.rates, cfg);
  auto ds = lgst::make_dataset(design, data);
  ds.meta["run"] = m.to_json();
  lgst::save_dataset(a.out, ds, m.hash());
  std::cout << "wrote " << a.out << " (" << ds.rows.size() << " rows)\n";
}

struct FitArgs {
  std::string model, design, data, out = "estimate.json";
  std::string route = "qr", uncertainty = "none";
  std::size_t bootstrap = 200;
  std::uint64_t seed = 4;
};

void cmd_fit(const FitArgs& a) {
  const auto loaded = lgst::load_model(a.model);
  const auto design = lgst::load_design(a.design);
  const auto dataset = lgst::load_dataset(a.data);
  lgst::RunManifest m;
  m.subcommand = "fit";
  m.inputs = {{"model", file_ref(a.model)}, {"design", file_ref(a.design)}, {"data", file_ref(a.data)}};
  m.seeds = {{"seed", a.seed}};
  m.config = {{"route", a.route}, {"uncertainty", a.uncertainty}, {"bootstrap", a.bootstrap}};

  const auto full = lgst::build_design(design, loaded.model);
  const auto aligned = lgst::align_dataset(design, full, dataset);
  if (aligned.missing_rows) note("dropped " + std::to_string(aligned.missing_rows) + " design rows without data");
  if (aligned.unmatched_rows) note("ignored " + std::to_string(aligned.unmatched_rows) + " data rows not in the design");

  lgst::FitOptions opts;
  if (a.route == "qr") opts.route = lgst::SolveRoute::qr;
  else if (a.route == "normal") opts.route = lgst::SolveRoute::normal;
  else throw lgst::DesignError("unknown route '" + a.route + "' (qr or normal)");
  const auto fit = lgst::fit_rates(aligned.design, aligned.delta, opts);
  const auto rank = lgst::rank_report(aligned.design);
  if (!rank.full_rank()) {
    note("design matrix is rank deficient: rank " + std::to_string(rank.rank) + " of " +
         std::to_string(rank.num_params) + ", null space dimension " +
         std::to_string(rank.num_params - rank.rank));
  }

  std::optional<Eigen::VectorXd> stderr_values;
  if (a.uncertainty == "linear") {
    stderr_values = lgst::linear_propagation_stderr(aligned.design, fit,
                                                    lgst::shot_variance(aligned.value, aligned.shots));
  } else if (a.uncertainty == "bootstrap") {
    stderr_values = lgst::bootstrap_stderr(aligned.design, aligned.delta, a.bootstrap, a.seed, opts);
  } else if (a.uncertainty != "none") {
    throw lgst::DesignError("unknown uncertainty method '" + a.uncertainty + "'");
  }

  nlohmann::json rates = nlohmann::json::array();
  for (std::size_t i = 0; i < loaded.model.num_parameters(); ++i) {
    const auto& p = loaded.model.parameter(i);
    nlohmann::json r = {{"gate", loaded.model.gates()[p.gate].id},
                        {"kind", std::string(1, lgst::kind_char(p.kind))},
                        {"pauli", p.label.label()},
                        {"value", fit.rates(static_cast<Eigen::Index>(i))}};
    if (stderr_values) r["stderr"] = (*stderr_values)(static_cast<Eigen::Index>(i));
    rates.push_back(std::move(r));
  }
  nlohmann::json meta = fit.meta();
  meta["rank"] = rank.to_json();
  meta["alignment"] = {{"rows_used", aligned.design.rows()},
                       {"missing_rows", aligned.missing_rows},
                       {"unmatched_rows", aligned.unmatched_rows}};
  meta["uncertainty"] = a.uncertainty;
  const nlohmann::json estimate = {
      {"model_ref", lgst::model_ref(loaded.model)},
      {"rates", rates},
      {"residuals", {{"H", fit.hamiltonian.residual}, {"S", fit.stochastic.residual}}},
      {"solver_meta", meta},
      {"run", m.to_json()}};
  lgst::write_json(a.out, m.hash(), estimate);
  std::cout << "wrote " << a.out << " (" << rates.size() << " rates, rank " << rank.rank << "/"
            << rank.num_params << ")\n";
  if (!fit.converged()) throw NonConvergence("NNLS hit its iteration cap; best iterate written");
}

struct RankArgs {
  std::string model, design, out = "rank.json";
};

void cmd_rank(const RankArgs& a) {
  const auto loaded = lgst::load_model(a.model);
  const auto design = lgst::load_design(a.design);
  lgst::RunManifest m;
  m.subcommand = "rank";
  m.inputs = {{"model", file_ref(a.model)}, {"design", file_ref(a.design)}};
  const auto rep = lgst::rank_report(lgst::build_design(design, loaded.model));
  lgst::write_json(a.out, m.hash(), rep.to_json());
  std::cout << "rank " << rep.rank << " of " << rep.num_params << (rep.full_rank() ? " (full)" : " (deficient)")
            << "\n";
}

struct ExperimentArgs {
  std::string which, out = "results", cache;
  std::size_t n = 0, depth = 15, circuits = 0, weight = 2, models = 0, subsets = 500, instances = 10;
  std::size_t max_circuits = 1000;
  std::vector<std::uint64_t> shots;
  std::vector<double> scales, etas;
  std::vector<std::size_t> kappas, counts;
  std::uint64_t seed = 1;
  std::string backend;
  int k = 3;
};

lgst::PaperDataset paper_data(const ExperimentArgs& a, lgst::RunManifest& m) {
  lgst::PaperDatasetConfig cfg;
  if (a.n) cfg.num_qubits = a.n;
  cfg.depth = a.depth;
  if (a.circuits) cfg.circuits = a.circuits;
  cfg.max_weight = a.weight;
  cfg.model_seed = a.seed;
  cfg.design_seed = lgst::derive_seed(a.seed, 2);
  cfg.order = a.k;
  cfg.backend = a.backend.empty() ? lgst::Backend::taylor : parse_backend(a.backend);
  m.config["dataset"] = cfg.to_json();
  std::optional<std::filesystem::path> cache;
  if (!a.cache.empty()) cache = a.cache;
  note("preparing " + std::to_string(cfg.circuits) + "-circuit dataset at n=" + std::to_string(cfg.num_qubits));
  return lgst::make_paper_dataset(cfg, cache);
}

void cmd_experiment(const ExperimentArgs& a) {
  lgst::RunManifest m;
  m.subcommand = "experiment " + a.which;
  m.seeds = {{"seed", a.seed}};
  const std::filesystem::path out = a.out;
  if (a.which == "fig2") {
    lgst::Fig2Config cfg;
    if (!a.shots.empty()) cfg.shots = a.shots.front();
    cfg.noise_seed = lgst::derive_seed(a.seed, 7);
    m.config["shots"] = cfg.shots;
    const auto data = paper_data(a, m);
    const auto r = lgst::run_fig2(data, cfg);
    lgst::write_fig2(data, cfg, r, out, m);
    std::cout << "N=inf median |error| / mean |rate|: H " << r.exact.median_abs_error[0] / r.exact.mean_abs_truth[0]
              << ", S " << r.exact.median_abs_error[1] / r.exact.mean_abs_truth[1] << "\n";
    if (!r.converged) throw NonConvergence("NNLS did not converge");
  } else if (a.which == "fig3") {
    lgst::Fig3Config cfg;
    if (!a.shots.empty()) cfg.shots = a.shots;
    cfg.circuit_counts = a.counts;
    cfg.subsets = a.subsets;
    cfg.seed = lgst::derive_seed(a.seed, 11);
    m.config["shots"] = cfg.shots;
    m.config["circuit_counts"] = cfg.circuit_counts;
    m.config["subsets"] = cfg.subsets;
    const auto data = paper_data(a, m);
    const auto r = lgst::run_fig3(data, cfg);
    lgst::write_fig3(r, out, m);
    std::cout << r.points.size() << " points written\n";
    if (!r.converged) throw NonConvergence("NNLS did not converge");
  } else if (a.which == "fig4") {
    lgst::Fig4Config cfg;
    cfg.etas = a.etas;
    if (a.models) cfg.models = a.models;
    if (!a.shots.empty()) cfg.shots = a.shots.front();
    cfg.seed = lgst::derive_seed(a.seed, 13);
    cfg.noise_seed = lgst::derive_seed(a.seed, 7);
    m.config["etas"] = cfg.etas;
    m.config["models"] = cfg.models;
    m.config["shots"] = cfg.shots;
    const auto data = paper_data(a, m);
    const auto r = lgst::run_fig4(data, cfg);
    lgst::write_fig4(r, out, m);
    for (const auto& p : r.points) {
      std::cout << "eta " << p.eta << ": median |error| " << p.box.median << " (mean |rate| " << r.reference << ")\n";
    }
    if (!r.converged) throw NonConvergence("NNLS did not converge");
  } else if (a.which == "fig5") {
    lgst::Fig5Config cfg;
    if (a.n) cfg.num_qubits = a.n;
    cfg.depth = a.depth;
    if (a.circuits) cfg.circuits = a.circuits;
    cfg.max_weight = a.weight;
    cfg.scales = a.scales;
    if (a.models) cfg.models = a.models;
    cfg.seed = a.seed;
    cfg.design_seed = lgst::derive_seed(a.seed, 2);
    if (!a.backend.empty()) cfg.backend = parse_backend(a.backend);
    cfg.order = a.k;
    m.config = cfg.to_json();
    const auto r = lgst::run_fig5(cfg);
    lgst::write_fig5(r, out, m);
    for (const auto& p : r.points) {
      std::cout << "c=" << p.scale << ": median |error| / mean |rate| = " << p.median_abs_error / p.mean_abs_rate << "\n";
    }
    if (!r.converged) throw NonConvergence("NNLS did not converge");
  } else if (a.which == "fig6") {
    lgst::Fig6Config cfg;
    if (a.n) cfg.num_qubits = a.n;
    cfg.depth = a.depth;
    cfg.max_weight = a.weight;
    if (!a.kappas.empty()) cfg.kappas = a.kappas;
    cfg.instances = a.instances;
    cfg.max_circuits = a.max_circuits;
    cfg.seed = a.seed;
    m.config = cfg.to_json();
    const auto r = lgst::run_fig6(cfg);
    lgst::write_fig6(r, out, m);
    std::cout << "all instances full rank: " << (r.all_full_rank ? "yes" : "no")
              << "; H-only needs no more circuits than S-only in " << 100 * r.h_not_above_s_fraction << "% of pairs\n";
  } else {
    throw lgst::DesignError("unknown experiment '" + a.which + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linearized gate set tomography toolkit"};
  app.require_subcommand(1);

  ModelGenArgs mg;
  auto* model_gen = app.add_subcommand("model-gen", "Generate an error model with sampled rates");
  model_gen->add_option("-n,--qubits", mg.n, "Number of qubits (ring connectivity)");
  model_gen->add_option("--seed", mg.seed, "Rate seed");
  model_gen->add_option("-c,--scale", mg.scale, "Multiply all rates by c >= 1");
  model_gen->add_option("--kind", mg.kind, "paper, h, s, or mixed");
  model_gen->add_option("--kappa", mg.kappa, "Generators for random models");
  model_gen->add_option("-o,--out", mg.out, "Output model JSON");

  DesignGenArgs dg;
  auto* design_gen = app.add_subcommand("design-gen", "Sample random circuits and observables");
  design_gen->add_option("--model", dg.model, "Model JSON (fixes n and the gate set)")->required();
  design_gen->add_option("-d,--depth", dg.depth, "Circuit depth");
  design_gen->add_option("-K,--circuits", dg.circuits, "Number of circuits");
  design_gen->add_option("-w,--weight", dg.weight, "Maximum observable weight");
  design_gen->add_option("--seed", dg.seed, "Sampler seed");
  design_gen->add_flag("--grow", dg.grow, "Add circuits until the design matrix is full rank");
  design_gen->add_option("--batch", dg.batch, "Circuits per growth step");
  design_gen->add_option("--max-circuits", dg.max_circuits, "Growth limit");
  design_gen->add_option("-o,--out", dg.out, "Output design JSON");
  design_gen->add_option("--matrix", dg.matrix, "Also write the binary design matrix");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Simulate noisy expectation values");
  simulate->add_option("--model", sa.model, "Model JSON with rates")->required();
  simulate->add_option("--design", sa.design, "Design JSON")->required();
  simulate->add_option("--backend", sa.backend, "auto, dense, or taylor");
  simulate->add_option("-k,--order", sa.k, "Taylor order");
  simulate->add_option("-N,--shots", sa.shots, "Shots per circuit (0 = infinite)");
  simulate->add_option("--seed", sa.seed, "Shot-noise seed");
  simulate->add_option("--dense-max-qubits", sa.dense_max, "Dense backend size guard");
  simulate->add_option("-o,--out", sa.out, "Output dataset CSV");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Estimate error rates from a dataset");
  fit->add_option("--model", fa.model, "Model JSON")->required();
  fit->add_option("--design", fa.design, "Design JSON")->required();
  fit->add_option("--data", fa.data, "Dataset CSV")->required();
  fit->add_option("--route", fa.route, "qr or normal");
  fit->add_option("--uncertainty", fa.uncertainty, "none, linear, or bootstrap");
  fit->add_option("--bootstrap", fa.bootstrap, "Bootstrap replicates");
  fit->add_option("--seed", fa.seed, "Bootstrap seed");
  fit->add_option("-o,--out", fa.out, "Output estimate JSON");

  RankArgs ra;
  auto* rank = app.add_subcommand("rank", "Rank report of a design for a model");
  rank->add_option("--model", ra.model, "Model JSON")->required();
  rank->add_option("--design", ra.design, "Design JSON")->required();
  rank->add_option("-o,--out", ra.out, "Output report JSON");

  ExperimentArgs ea;
  auto* experiment = app.add_subcommand("experiment", "Run one of the simulation studies");
  experiment->add_option("which", ea.which, "fig2, fig3, fig4, fig5, or fig6")
      ->required()
      ->check(CLI::IsMember({"fig2", "fig3", "fig4", "fig5", "fig6"}));
  experiment->add_option("-n,--qubits", ea.n, "Number of qubits");
  experiment->add_option("-d,--depth", ea.depth, "Circuit depth");
  experiment->add_option("-K,--circuits", ea.circuits, "Number of circuits");
  experiment->add_option("-w,--weight", ea.weight, "Maximum observable weight");
  experiment->add_option("-N,--shots", ea.shots, "Shots per circuit, 0 = infinite (fig3 takes a list)");
  experiment->add_option("--seed", ea.seed, "Master seed");
  experiment->add_option("--backend", ea.backend, "dense or taylor");
  experiment->add_option("-k,--order", ea.k, "Taylor order");
  experiment->add_option("-c,--scales", ea.scales, "Error scales (fig5)");
  experiment->add_option("--eta", ea.etas, "Fractions of parameters kept (fig4)");
  experiment->add_option("--models", ea.models, "Models per setting (fig4, fig5)");
  experiment->add_option("--subsets", ea.subsets, "Subsets per circuit count (fig3)");
  experiment->add_option("--counts", ea.counts, "Circuit counts (fig3)");
  experiment->add_option("--kappas", ea.kappas, "Parameter counts (fig6)");
  experiment->add_option("--instances", ea.instances, "Models per class and kappa (fig6)");
  experiment->add_option("--max-circuits", ea.max_circuits, "Growth limit (fig6)");
  experiment->add_option("--cache", ea.cache, "Directory for cached simulated data");
  experiment->add_option("-o,--out", ea.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*model_gen) cmd_model_gen(mg);
    else if (*design_gen) cmd_design_gen(dg);
    else if (*simulate) cmd_simulate(sa);
    else if (*fit) cmd_fit(fa);
    else if (*rank) cmd_rank(ra);
    else if (*experiment) cmd_experiment(ea);
  } catch (const NonConvergence& e) {
    note(std::string("not converged: ") + e.what());
    return kExitNonConvergence;
  } catch (const lgst::Error& e) {
    note(std::string("error: ") + e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    note(std::string("internal error: ") + e.what());
    return 1;
  }
  return 0;
}
