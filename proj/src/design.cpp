#include "lgst/design.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "lgst/errors.hpp"
#include "lgst/propagation.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lgst {

nlohmann::json GateSet::to_json() const {
  return {{"one_qubit", one_qubit},
          {"two_qubit", two_qubit},
          {"p_two_qubit", p_two_qubit},
          {"emit_idle", emit_idle}};
}

GateSet GateSet::from_json(const nlohmann::json& j) {
  GateSet g;
  g.one_qubit = j.at("one_qubit").get<std::vector<std::string>>();
  g.two_qubit = j.value("two_qubit", std::string());
  g.p_two_qubit = j.value("p_two_qubit", 0.0);
  g.emit_idle = j.value("emit_idle", false);
  return g;
}

GateSet gate_set_for(const ErrorModel& model, std::vector<Edge>* edges) {
  GateSet gs;
  gs.one_qubit.clear();
  gs.two_qubit.clear();
  std::set<std::string> names;
  std::vector<Edge> found;
  for (const auto& g : model.gates()) {
    if (g.targets.size() == 1) names.insert(g.ideal);
    if (g.targets.size() == 2) {
      gs.two_qubit = g.ideal;
      found.emplace_back(g.targets[0], g.targets[1]);
    }
  }
  gs.emit_idle = names.contains("idle");
  // Fixed order so sampling does not depend on the model file layout.
  for (const char* name : {"x90", "y90", "z90"}) {
    if (names.erase(name)) gs.one_qubit.emplace_back(name);
  }
  names.erase("idle");
  for (const auto& name : names) gs.one_qubit.push_back(name);
  gs.one_qubit.emplace_back("idle");
  std::sort(found.begin(), found.end());
  if (edges) *edges = std::move(found);
  return gs;
}

Circuit sample_random_circuit(std::size_t num_qubits, std::size_t depth,
                              std::span<const Edge> edges, const GateSet& gates, Rng& rng) {
  const bool have_two = !gates.two_qubit.empty() && !edges.empty() && gates.p_two_qubit > 0.0;
  if (gates.one_qubit.empty() && !have_two) throw DesignError("empty gate set");
  for (auto [a, b] : edges) {
    if (a >= num_qubits || b >= num_qubits || a == b) throw DesignError("invalid edge");
  }
  std::vector<Layer> layers;
  layers.reserve(depth);
  std::vector<std::size_t> order(edges.size());
  std::vector<char> busy(num_qubits);
  for (std::size_t l = 0; l < depth; ++l) {
    Layer layer;
    std::fill(busy.begin(), busy.end(), 0);
    if (have_two) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      shuffle(std::span<std::size_t>(order), rng);
      for (auto e : order) {
        const auto [a, b] = edges[e];
        // Draw for every edge so the stream layout does not depend on conflicts.
        const bool take = bernoulli(rng, gates.p_two_qubit);
        if (take && !busy[a] && !busy[b]) {
          busy[a] = busy[b] = 1;
          layer.push_back({gates.two_qubit, {a, b}});
        }
      }
    }
    if (!gates.one_qubit.empty()) {
      for (std::size_t q = 0; q < num_qubits; ++q) {
        if (busy[q]) continue;
        const auto& name = gates.one_qubit[uniform_index(rng, gates.one_qubit.size())];
        if (name == "idle" && !gates.emit_idle) continue;
        layer.push_back({name, {q}});
      }
    }
    std::sort(layer.begin(), layer.end(), [](const GateApplication& x, const GateApplication& y) {
      return x.targets < y.targets;
    });
    layers.push_back(std::move(layer));
  }
  return Circuit(num_qubits, std::move(layers));
}

std::vector<PauliString> enumerate_observables(std::size_t num_qubits, std::size_t max_weight) {
  if (max_weight < 1 || max_weight > num_qubits) {
    throw DesignError("observable weight " + std::to_string(max_weight) +
                      " out of range [1, " + std::to_string(num_qubits) + "]");
  }
  std::vector<PauliString> out;
  std::vector<std::size_t> pick;
  // Depth-first over increasing qubit indices; sorted afterwards into canonical order.
  auto rec = [&](auto&& self, std::size_t start) -> void {
    if (!pick.empty()) {
      PauliString p(num_qubits);
      for (auto q : pick) p.set_op(q, 'Z');
      out.push_back(std::move(p));
    }
    if (pick.size() == max_weight) return;
    for (std::size_t q = start; q < num_qubits; ++q) {
      pick.push_back(q);
      self(self, q + 1);
      pick.pop_back();
    }
  };
  rec(rec, 0);
  std::sort(out.begin(), out.end());
  return out;
}

ExperimentDesign ExperimentDesign::subset(std::span<const std::size_t> circuit_indices) const {
  ExperimentDesign out = *this;
  out.circuits.clear();
  for (auto i : circuit_indices) out.circuits.push_back(circuits.at(i));
  return out;
}

ExperimentDesign generate_design(std::size_t num_qubits, std::size_t depth,
                                 std::size_t num_circuits, std::size_t max_weight,
                                 std::span<const Edge> edges, const GateSet& gates,
                                 std::uint64_t seed) {
  ExperimentDesign d;
  d.num_qubits = num_qubits;
  d.max_weight = max_weight;
  d.depth = depth;
  d.gates = gates;
  d.edges.assign(edges.begin(), edges.end());
  d.seed = seed;
  d.observables = enumerate_observables(num_qubits, max_weight);
  extend_design(d, num_circuits);
  return d;
}

void extend_design(ExperimentDesign& design, std::size_t num_circuits) {
  for (std::size_t i = design.circuits.size(); i < num_circuits; ++i) {
    Rng rng(derive_seed(design.seed, i));
    design.circuits.push_back(
        sample_random_circuit(design.num_qubits, design.depth, design.edges, design.gates, rng));
  }
}

nlohmann::json design_to_json(const ExperimentDesign& design) {
  nlohmann::json edges = nlohmann::json::array();
  for (auto [a, b] : design.edges) edges.push_back({a, b});
  nlohmann::json circuits = nlohmann::json::array();
  for (const auto& c : design.circuits) {
    nlohmann::json cj = to_json(c);
    cj["id"] = c.id();
    circuits.push_back(std::move(cj));
  }
  nlohmann::json observables = nlohmann::json::array();
  for (const auto& q : design.observables) observables.push_back(q.label());
  return {{"n", design.num_qubits},
          {"w", design.max_weight},
          {"depth", design.depth},
          {"sampler",
           {{"name", "ring-matching"},
            {"params", {{"gates", design.gates.to_json()}, {"edges", edges}}},
            {"seed", design.seed}}},
          {"observables", observables},
          {"circuits", circuits}};
}

ExperimentDesign design_from_json(const nlohmann::json& j) {
  ExperimentDesign d;
  try {
    d.num_qubits = j.at("n").get<std::size_t>();
    d.max_weight = j.at("w").get<std::size_t>();
    d.depth = j.at("depth").get<std::size_t>();
    const auto& sampler = j.at("sampler");
    if (sampler.value("name", std::string()) != "ring-matching") {
      throw FormatError("design file: unknown sampler '" + sampler.value("name", std::string()) +
                        "'");
    }
    d.seed = sampler.at("seed").get<std::uint64_t>();
    d.gates = GateSet::from_json(sampler.at("params").at("gates"));
    for (const auto& e : sampler.at("params").at("edges")) {
      d.edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    }
    if (j.contains("observables")) {
      for (const auto& q : j["observables"]) {
        d.observables.push_back(PauliString::from_string(q.get<std::string>()));
      }
    } else {
      d.observables = enumerate_observables(d.num_qubits, d.max_weight);
    }
    for (const auto& c : j.at("circuits")) {
      Circuit circuit = circuit_from_json(c);
      if (c.contains("id") && c["id"].get<std::string>() != circuit.id()) {
        throw FormatError("design file: circuit id " + c["id"].get<std::string>() +
                          " does not match its content");
      }
      d.circuits.push_back(std::move(circuit));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("design file: ") + ex.what());
  }
  for (const auto& q : d.observables) {
    if (q.num_qubits() != d.num_qubits || !q.is_z_type() || q.is_identity()) {
      throw DesignError("design file: observable " + q.str() + " is not a Z-type Pauli on " +
                        std::to_string(d.num_qubits) + " qubits");
    }
  }
  return d;
}

std::vector<std::size_t> DesignMatrix::rows_of_kind(GeneratorKind kind) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < ideal.size(); ++r) {
    if (row_kind(r) == kind) out.push_back(r);
  }
  return out;
}

std::vector<std::size_t> DesignMatrix::columns_of_kind(GeneratorKind kind) const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < column_kind.size(); ++c) {
    if (column_kind[c] == kind) out.push_back(c);
  }
  return out;
}

SparseRowMatrix DesignMatrix::block(std::span<const std::size_t> row_ids,
                                    std::span<const std::size_t> col_ids) const {
  std::vector<int> col_map(cols(), -1);
  for (std::size_t j = 0; j < col_ids.size(); ++j) col_map.at(col_ids[j]) = static_cast<int>(j);
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < row_ids.size(); ++i) {
    for (SparseRowMatrix::InnerIterator it(matrix, static_cast<int>(row_ids[i])); it; ++it) {
      const int c = col_map[static_cast<std::size_t>(it.col())];
      if (c >= 0) trip.emplace_back(static_cast<int>(i), c, it.value());
    }
  }
  SparseRowMatrix out(static_cast<int>(row_ids.size()), static_cast<int>(col_ids.size()));
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

DesignMatrix DesignMatrix::select_circuits(std::span<const std::size_t> circuits) const {
  std::size_t max_circuit = 0;
  for (auto c : circuit_index) max_circuit = std::max<std::size_t>(max_circuit, c + 1);
  std::vector<std::vector<std::size_t>> rows_by_circuit(max_circuit);
  for (std::size_t r = 0; r < circuit_index.size(); ++r) rows_by_circuit[circuit_index[r]].push_back(r);

  std::vector<std::size_t> row_ids;
  DesignMatrix out;
  out.column_kind = column_kind;
  for (std::size_t k = 0; k < circuits.size(); ++k) {
    if (circuits[k] >= max_circuit) continue;
    for (auto r : rows_by_circuit[circuits[k]]) {
      row_ids.push_back(r);
      out.circuit_index.push_back(static_cast<std::uint32_t>(k));
      out.observable_index.push_back(observable_index[r]);
      out.ideal.push_back(ideal[r]);
    }
  }
  std::vector<std::size_t> all_cols(cols());
  for (std::size_t c = 0; c < all_cols.size(); ++c) all_cols[c] = c;
  out.matrix = block(row_ids, all_cols);
  return out;
}

DesignMatrix DesignMatrix::select_columns(std::span<const std::size_t> col_ids) const {
  DesignMatrix out;
  out.circuit_index = circuit_index;
  out.observable_index = observable_index;
  out.ideal = ideal;
  for (auto c : col_ids) out.column_kind.push_back(column_kind.at(c));
  std::vector<std::size_t> all_rows(rows());
  for (std::size_t r = 0; r < all_rows.size(); ++r) all_rows[r] = r;
  out.matrix = block(all_rows, col_ids);
  return out;
}

namespace {

struct CircuitRows {
  std::vector<int> row_nnz;
  std::vector<int> cols;
  std::vector<double> values;
  std::vector<std::int8_t> ideal;
};

}  // namespace

DesignMatrix build_design(const ExperimentDesign& design, const ErrorModel& model) {
  if (design.num_qubits != model.num_qubits()) {
    throw DimensionError("design has " + std::to_string(design.num_qubits) +
                         " qubits, model has " + std::to_string(model.num_qubits()));
  }
  const std::size_t kappa = model.num_parameters();
  const std::size_t nc = design.circuits.size();
  const std::size_t m = design.observables.size();
  std::vector<CircuitRows> parts(nc);

  // Exceptions must not escape an OpenMP region; keep the first one and rethrow.
  std::exception_ptr failure;
#pragma omp parallel
  {
    std::vector<double> scratch(kappa, 0.0);
#pragma omp for schedule(dynamic, 4)
    for (std::size_t c = 0; c < nc; ++c) {
      try {
        const PropagatedCircuit pc = propagate_all(design.circuits[c], model);
        CircuitRows& part = parts[c];
        for (const auto& q : design.observables) {
          const SensitivityRow row = sensitivity_row(pc, q, scratch);
          part.row_nnz.push_back(static_cast<int>(row.entries.size()));
          part.ideal.push_back(static_cast<std::int8_t>(row.ideal));
          for (auto [col, v] : row.entries) {
            part.cols.push_back(static_cast<int>(col));
            part.values.push_back(v);
          }
        }
      } catch (...) {
#pragma omp critical(lgst_build_design)
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);

  DesignMatrix d;
  std::size_t nnz = 0;
  for (const auto& p : parts) nnz += p.values.size();
  d.matrix.resize(static_cast<int>(nc * m), static_cast<int>(kappa));
  d.matrix.resizeNonZeros(static_cast<Eigen::Index>(nnz));
  int* outer = d.matrix.outerIndexPtr();
  int* inner = d.matrix.innerIndexPtr();
  double* vals = d.matrix.valuePtr();
  std::size_t row = 0, pos = 0;
  outer[0] = 0;
  d.circuit_index.reserve(nc * m);
  d.observable_index.reserve(nc * m);
  d.ideal.reserve(nc * m);
  for (std::size_t c = 0; c < nc; ++c) {
    auto& p = parts[c];
    std::copy(p.cols.begin(), p.cols.end(), inner + pos);
    std::copy(p.values.begin(), p.values.end(), vals + pos);
    for (std::size_t k = 0; k < m; ++k) {
      pos += static_cast<std::size_t>(p.row_nnz[k]);
      outer[++row] = static_cast<int>(pos);
      d.circuit_index.push_back(static_cast<std::uint32_t>(c));
      d.observable_index.push_back(static_cast<std::uint32_t>(k));
      d.ideal.push_back(p.ideal[k]);
    }
    p = CircuitRows{};
  }
  d.column_kind.reserve(kappa);
  for (std::size_t i = 0; i < kappa; ++i) d.column_kind.push_back(model.kind(i));
  return d;
}

double rank_tolerance(std::size_t rows, std::size_t cols, double sigma_max) {
  return static_cast<double>(std::max(rows, cols)) * sigma_max * std::ldexp(1.0, -40);
}

namespace {

Eigen::VectorXd singular_values_of(const Eigen::MatrixXd& a) {
  if (a.rows() == 0 || a.cols() == 0) return Eigen::VectorXd();
  if (a.rows() > a.cols()) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
    return Eigen::JacobiSVD<Eigen::MatrixXd>(r).singularValues();
  }
  return Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
}

BlockRank rank_from_singular_values(std::size_t rows, std::size_t cols,
                                    const Eigen::VectorXd& sv) {
  BlockRank b;
  b.rows = rows;
  b.cols = cols;
  b.singular_values.assign(sv.data(), sv.data() + sv.size());
  b.sigma_max = sv.size() ? sv(0) : 0.0;
  const double tol = rank_tolerance(rows, cols, b.sigma_max);
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol && sv(i) > 0.0) {
      ++b.rank;
      b.sigma_min_nonzero = sv(i);
    }
  }
  if (cols == 0) {
    b.condition = 1.0;
  } else if (b.rank < cols) {
    b.condition = std::numeric_limits<double>::infinity();
  } else {
    b.condition = b.sigma_max / b.sigma_min_nonzero;
  }
  return b;
}

}  // namespace

BlockRank block_rank(const Eigen::MatrixXd& a) {
  return rank_from_singular_values(static_cast<std::size_t>(a.rows()),
                                   static_cast<std::size_t>(a.cols()), singular_values_of(a));
}

RankReport rank_report(const DesignMatrix& d) {
  RankReport rep;
  rep.num_params = d.cols();
  rep.num_rows = d.rows();
  for (auto kind : {GeneratorKind::H, GeneratorKind::S}) {
    const auto rows = d.rows_of_kind(kind);
    const auto cols = d.columns_of_kind(kind);
    const Eigen::MatrixXd dense = Eigen::MatrixXd(d.block(rows, cols));
    (kind == GeneratorKind::H ? rep.hamiltonian : rep.stochastic) = block_rank(dense);
  }
  rep.rank = rep.hamiltonian.rank + rep.stochastic.rank;
  if (rep.rank < rep.num_params) {
    rep.condition = std::numeric_limits<double>::infinity();
  } else if (rep.num_params == 0) {
    rep.condition = 1.0;
  } else {
    double hi = std::max(rep.hamiltonian.sigma_max, rep.stochastic.sigma_max);
    double lo = std::numeric_limits<double>::infinity();
    if (rep.hamiltonian.cols) lo = std::min(lo, rep.hamiltonian.sigma_min_nonzero);
    if (rep.stochastic.cols) lo = std::min(lo, rep.stochastic.sigma_min_nonzero);
    rep.condition = hi / lo;
  }
  return rep;
}

nlohmann::json RankReport::to_json() const {
  auto block = [](const BlockRank& b) {
    nlohmann::json j = {{"rows", b.rows}, {"cols", b.cols}, {"rank", b.rank},
                        {"null_space_dim", b.cols - b.rank}, {"sigma_max", b.sigma_max}};
    j["condition"] = std::isfinite(b.condition) ? nlohmann::json(b.condition) : nlohmann::json("inf");
    return j;
  };
  nlohmann::json j = {{"num_params", num_params},
                      {"num_rows", num_rows},
                      {"rank", rank},
                      {"rank_ratio", rank_ratio()},
                      {"full_rank", full_rank()},
                      {"hamiltonian", block(hamiltonian)},
                      {"stochastic", block(stochastic)}};
  j["condition"] = std::isfinite(condition) ? nlohmann::json(condition) : nlohmann::json("inf");
  return j;
}

RankAccumulator::RankAccumulator(std::size_t cols) : cols_(cols), r_(0, static_cast<Eigen::Index>(cols)) {}

void RankAccumulator::add_rows(const Eigen::MatrixXd& rows) {
  if (static_cast<std::size_t>(rows.cols()) != cols_) {
    throw DimensionError("RankAccumulator: column count mismatch");
  }
  if (rows.rows() == 0 || cols_ == 0) {
    rows_seen_ += static_cast<std::size_t>(rows.rows());
    return;
  }
  Eigen::MatrixXd stacked(r_.rows() + rows.rows(), r_.cols());
  stacked << r_, rows;
  rows_seen_ += static_cast<std::size_t>(rows.rows());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
  const Eigen::Index k = std::min(stacked.rows(), stacked.cols());
  r_ = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
}

std::size_t RankAccumulator::rank() const {
  if (r_.rows() == 0) return 0;
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(r_).singularValues();
  return rank_from_singular_values(rows_seen_, cols_, sv).rank;
}

GrowResult grow_until_full_rank(const ErrorModel& model, ExperimentDesign start,
                                std::size_t batch, std::size_t max_circuits) {
  if (batch < 1) throw DesignError("batch must be >= 1");
  GrowResult out;
  out.num_params = model.num_parameters();
  const auto h_cols_model = model.hamiltonian_indices();
  const auto s_cols_model = model.stochastic_indices();
  RankAccumulator acc_h(h_cols_model.size()), acc_s(s_cols_model.size());

  auto absorb = [&](const ExperimentDesign& part) {
    const DesignMatrix d = build_design(part, model);
    const Eigen::MatrixXd h(d.block(d.rows_of_kind(GeneratorKind::H), h_cols_model));
    const Eigen::MatrixXd s(d.block(d.rows_of_kind(GeneratorKind::S), s_cols_model));
    acc_h.add_rows(h);
    acc_s.add_rows(s);
  };

  std::size_t done = 0;
  if (!start.circuits.empty()) {
    absorb(start);
    done = start.circuits.size();
    out.rank = acc_h.rank() + acc_s.rank();
    out.history.emplace_back(done, out.rank);
  }
  ExperimentDesign design = std::move(start);
  while (out.rank < out.num_params && done < max_circuits) {
    const std::size_t target = std::min(max_circuits, done + batch);
    extend_design(design, target);
    std::vector<std::size_t> fresh;
    for (std::size_t i = done; i < target; ++i) fresh.push_back(i);
    absorb(design.subset(fresh));
    done = target;
    out.rank = acc_h.rank() + acc_s.rank();
    out.history.emplace_back(done, out.rank);
  }
  out.full_rank = out.rank == out.num_params;
  out.design = std::move(design);
  return out;
}

}  // namespace lgst
