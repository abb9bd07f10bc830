#include "lgst/error_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "json.hpp"
#include "lgst/clifford.hpp"
#include "lgst/errors.hpp"

namespace lgst {

char kind_char(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::H: return 'H';
    case GeneratorKind::S: return 'S';
    case GeneratorKind::C: return 'C';
    case GeneratorKind::A: return 'A';
  }
  return '?';
}

GeneratorKind parse_kind(std::string_view text) {
  if (text == "H") return GeneratorKind::H;
  if (text == "S") return GeneratorKind::S;
  if (text == "C") return GeneratorKind::C;
  if (text == "A") return GeneratorKind::A;
  throw FormatError("unknown generator kind '" + std::string(text) + "'");
}

std::strong_ordering ElementaryGenerator::operator<=>(const ElementaryGenerator& other) const {
  if (auto c = static_cast<int>(kind) <=> static_cast<int>(other.kind); c != 0) return c;
  return label <=> other.label;
}

ModelDiagnostics validate_model(std::size_t num_qubits, std::span<const GateErrorSpec> gates) {
  ModelDiagnostics diag;
  diag.num_qubits = num_qubits;
  std::set<std::string> ids;
  std::set<std::pair<std::string, std::vector<std::size_t>>> applications;
  for (const auto& g : gates) {
    const std::string where = "gate '" + g.id + "'";
    if (g.id.empty()) diag.issues.push_back("gate with empty id");
    if (!ids.insert(g.id).second) diag.issues.push_back(where + ": duplicate gate id");
    if (!is_known_gate(g.ideal)) {
      diag.issues.push_back(where + ": unknown ideal gate '" + g.ideal + "'");
    } else if (g.targets.size() != static_cast<std::size_t>(gate_arity(g.ideal))) {
      diag.issues.push_back(where + ": wrong number of targets for '" + g.ideal + "'");
    }
    for (auto t : g.targets) {
      if (t >= num_qubits) diag.issues.push_back(where + ": target out of range");
    }
    if (!applications.insert({g.ideal, g.targets}).second) {
      diag.issues.push_back(where + ": another gate already applies '" + g.ideal +
                            "' to the same targets");
    }
    std::set<std::pair<int, std::string>> seen;
    for (const auto& e : g.errors) {
      const std::string what = where + " error " + kind_char(e.kind) + "_" + e.label.str();
      if (e.kind == GeneratorKind::C || e.kind == GeneratorKind::A) {
        diag.issues.push_back(what + ": unsupported generator kind");
        continue;
      }
      if (e.label.num_qubits() != num_qubits) {
        diag.issues.push_back(what + ": label has " + std::to_string(e.label.num_qubits()) +
                              " qubits, model has " + std::to_string(num_qubits));
        continue;
      }
      if (e.label.is_identity()) diag.issues.push_back(what + ": identity label");
      if (e.label.phase() != 0) diag.issues.push_back(what + ": label must be unsigned");
      if (!seen.insert({static_cast<int>(e.kind), e.label.label()}).second) {
        diag.issues.push_back(what + ": duplicate generator");
      }
      ++diag.kappa;
      if (e.kind == GeneratorKind::H) ++diag.num_hamiltonian;
      if (e.kind == GeneratorKind::S) ++diag.num_stochastic;
    }
  }
  return diag;
}

ErrorModel ErrorModel::create(std::size_t num_qubits, std::vector<GateErrorSpec> gates) {
  const ModelDiagnostics diag = validate_model(num_qubits, gates);
  if (!diag.ok()) {
    std::string msg = "invalid error model (" + std::to_string(diag.issues.size()) + " issue" +
                      (diag.issues.size() == 1 ? "" : "s") + "):";
    for (const auto& issue : diag.issues) msg += "\n  - " + issue;
    throw ModelError(msg, diag.issues);
  }
  std::sort(gates.begin(), gates.end(),
            [](const GateErrorSpec& a, const GateErrorSpec& b) { return a.id < b.id; });
  ErrorModel m;
  m.n_ = num_qubits;
  m.gates_ = std::move(gates);
  for (std::size_t g = 0; g < m.gates_.size(); ++g) {
    auto& errors = m.gates_[g].errors;
    std::sort(errors.begin(), errors.end());
    m.offsets_.push_back(m.params_.size());
    m.by_id_.emplace(m.gates_[g].id, g);
    for (const auto& e : errors) m.params_.push_back({g, e.kind, e.label});
  }
  return m;
}

std::optional<std::size_t> ErrorModel::gate_index(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> ErrorModel::find_gate(std::string_view ideal,
                                                 std::span<const std::size_t> targets) const {
  for (std::size_t g = 0; g < gates_.size(); ++g) {
    const auto& spec = gates_[g];
    if (spec.ideal == ideal && std::equal(spec.targets.begin(), spec.targets.end(),
                                          targets.begin(), targets.end())) {
      return g;
    }
  }
  return std::nullopt;
}

std::optional<std::size_t> ErrorModel::parameter_index(std::string_view gate_id,
                                                       GeneratorKind kind,
                                                       const PauliString& label) const {
  const auto g = gate_index(gate_id);
  if (!g) return std::nullopt;
  const auto& errors = gates_[*g].errors;
  const ElementaryGenerator key{kind, label};
  auto it = std::lower_bound(errors.begin(), errors.end(), key);
  if (it == errors.end() || !(*it == key)) return std::nullopt;
  return offsets_[*g] + static_cast<std::size_t>(it - errors.begin());
}

std::vector<std::size_t> ErrorModel::hamiltonian_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].kind == GeneratorKind::H) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> ErrorModel::stochastic_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].kind == GeneratorKind::S) out.push_back(i);
  }
  return out;
}

std::pair<ErrorModel, std::vector<std::size_t>> ErrorModel::restricted(
    std::span<const std::size_t> keep) const {
  std::vector<bool> kept(params_.size(), false);
  for (auto i : keep) kept.at(i) = true;
  std::vector<GateErrorSpec> gates;
  std::vector<std::size_t> origin;
  for (std::size_t g = 0; g < gates_.size(); ++g) {
    GateErrorSpec spec = gates_[g];
    spec.errors.clear();
    for (std::size_t k = 0; k < gates_[g].errors.size(); ++k) {
      if (kept[offsets_[g] + k]) {
        spec.errors.push_back(gates_[g].errors[k]);
        origin.push_back(offsets_[g] + k);
      }
    }
    gates.push_back(std::move(spec));
  }
  ErrorModel sub = create(n_, std::move(gates));
  sub.recipe_ = recipe_;
  return {std::move(sub), std::move(origin)};
}

std::vector<std::size_t> resolve_layer(const ErrorModel& model, const Layer& layer) {
  std::vector<std::size_t> out;
  out.reserve(layer.size());
  for (const auto& app : layer) {
    const auto g = model.find_gate(app.gate, app.targets);
    if (!g) {
      std::string t;
      for (auto q : app.targets) t += (t.empty() ? "" : ",") + std::to_string(q);
      throw ModelError("model has no gate '" + app.gate + "' on qubits [" + t + "]");
    }
    out.push_back(*g);
  }
  return out;
}

RateVector RateVector::zeros(const ErrorModel& model) {
  RateVector r;
  r.values.assign(model.num_parameters(), 0.0);
  r.kinds.reserve(model.num_parameters());
  for (std::size_t i = 0; i < model.num_parameters(); ++i) r.kinds.push_back(model.kind(i));
  return r;
}

bool RateVector::is_admissible() const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (kinds[i] == GeneratorKind::S && !(values[i] >= 0.0)) return false;
  }
  return true;
}

RateVector RateVector::scaled(double c) const {
  RateVector out = *this;
  for (auto& v : out.values) v *= c;
  return out;
}

std::vector<std::pair<ElementaryGenerator, double>> layer_lindbladian(const ErrorModel& model,
                                                                      const RateVector& rates,
                                                                      const Layer& layer) {
  if (rates.size() != model.num_parameters()) {
    throw DimensionError("layer_lindbladian: rate vector does not match the model");
  }
  std::map<ElementaryGenerator, double> merged;
  for (auto g : resolve_layer(model, layer)) {
    const auto& errors = model.gates()[g].errors;
    for (std::size_t k = 0; k < errors.size(); ++k) {
      merged[errors[k]] += rates[model.parameter_offset(g) + k];
    }
  }
  return {merged.begin(), merged.end()};
}

std::vector<Edge> ring_edges(std::size_t num_qubits) {
  std::vector<Edge> edges;
  if (num_qubits == 2) {
    edges.emplace_back(0, 1);
  } else if (num_qubits >= 3) {
    for (std::size_t q = 0; q < num_qubits; ++q) edges.emplace_back(q, (q + 1) % num_qubits);
  }
  return edges;
}

void validate_edges(std::size_t num_qubits, std::span<const Edge> edges) {
  std::vector<std::string> issues;
  std::set<Edge> seen;
  for (auto [a, b] : edges) {
    const std::string e = "(" + std::to_string(a) + "," + std::to_string(b) + ")";
    if (a >= num_qubits || b >= num_qubits) issues.push_back("edge " + e + " out of range");
    if (a == b) issues.push_back("edge " + e + " is a self-loop");
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) {
      issues.push_back("edge " + e + " repeated");
    }
  }
  if (!issues.empty()) {
    std::string msg = "invalid connectivity:";
    for (const auto& i : issues) msg += "\n  - " + i;
    throw ModelError(msg, issues);
  }
}

namespace {

PauliString letters_on(std::size_t n, std::initializer_list<std::pair<std::size_t, char>> ops) {
  PauliString p(n);
  for (auto [q, c] : ops) p.set_op(q, c);
  return p;
}

std::string gate_id(std::string_view ideal, std::span<const std::size_t> targets) {
  std::string id(ideal);
  for (auto t : targets) id += "_" + std::to_string(t);
  return id;
}

nlohmann::json paper_recipe(std::span<const Edge> edges, std::uint64_t seed, double scale) {
  nlohmann::json e = nlohmann::json::array();
  for (auto [a, b] : edges) e.push_back({a, b});
  return {
      {"name", "local-crosstalk"},
      {"gate_set", {"x90", "y90", "z90", "cz"}},
      {"edges", e},
      {"one_qubit_target_errors", "H and S of the rotation axis on the target"},
      {"two_qubit_target_errors", "H and S of Z_q, Z_r, Z_q Z_r"},
      {"spillover", "H of Z_p on every non-target qubit p, for every gate"},
      {"zz_coupling", "cz: H of Z_t Z_p for each target t and every non-target qubit p"},
      {"spam", "S of X_q on every qubit for prep and for meas"},
      {"hamiltonian_rates", {-1e-2, 1e-2}},
      {"stochastic_rates", {0.0, 1e-3}},
      {"seed", seed},
      {"scale", scale},
  };
}

}  // namespace

RateVector sample_paper_rates(const ErrorModel& model, std::uint64_t seed, double scale) {
  Rng rng(seed);
  RateVector rates = RateVector::zeros(model);
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const double v = rates.kinds[i] == GeneratorKind::S ? uniform(rng, 0.0, 1e-3)
                                                        : uniform(rng, -1e-2, 1e-2);
    rates.values[i] = v * scale;
  }
  return rates;
}

GeneratedModel build_paper_model(std::size_t num_qubits, std::span<const Edge> edges,
                                 std::uint64_t seed, double scale) {
  if (num_qubits == 0) throw ModelError("model needs at least one qubit");
  if (!(scale >= 1.0)) throw ModelError("rate scale c must be >= 1");
  validate_edges(num_qubits, edges);
  const std::size_t n = num_qubits;
  using G = GeneratorKind;
  std::vector<GateErrorSpec> gates;

  for (std::size_t q = 0; q < n; ++q) {
    for (char axis : {'X', 'Y', 'Z'}) {
      const std::string ideal = std::string(1, static_cast<char>(axis + ('x' - 'X'))) + "90";
      const std::size_t t[] = {q};
      GateErrorSpec spec{gate_id(ideal, t), ideal, {q}, {}};
      spec.errors.push_back({G::H, letters_on(n, {{q, axis}})});
      spec.errors.push_back({G::S, letters_on(n, {{q, axis}})});
      for (std::size_t p = 0; p < n; ++p) {
        if (p != q) spec.errors.push_back({G::H, letters_on(n, {{p, 'Z'}})});
      }
      gates.push_back(std::move(spec));
    }
  }
  for (auto [a, b] : edges) {
    const std::size_t t[] = {a, b};
    GateErrorSpec spec{gate_id("cz", t), "cz", {a, b}, {}};
    for (auto kind : {G::H, G::S}) {
      spec.errors.push_back({kind, letters_on(n, {{a, 'Z'}})});
      spec.errors.push_back({kind, letters_on(n, {{b, 'Z'}})});
      spec.errors.push_back({kind, letters_on(n, {{a, 'Z'}, {b, 'Z'}})});
    }
    for (std::size_t p = 0; p < n; ++p) {
      if (p == a || p == b) continue;
      spec.errors.push_back({G::H, letters_on(n, {{p, 'Z'}})});
      spec.errors.push_back({G::H, letters_on(n, {{a, 'Z'}, {p, 'Z'}})});
      spec.errors.push_back({G::H, letters_on(n, {{b, 'Z'}, {p, 'Z'}})});
    }
    gates.push_back(std::move(spec));
  }
  for (const char* pseudo : {"prep", "meas"}) {
    GateErrorSpec spec{pseudo, pseudo, {}, {}};
    for (std::size_t q = 0; q < n; ++q) spec.errors.push_back({G::S, letters_on(n, {{q, 'X'}})});
    gates.push_back(std::move(spec));
  }

  GeneratedModel out{ErrorModel::create(n, std::move(gates)), {}};
  out.model.set_recipe(paper_recipe(edges, seed, scale).dump());
  out.rates = sample_paper_rates(out.model, seed, scale);
  return out;
}

ErrorModel build_random_model(std::size_t num_qubits, std::span<const Edge> edges,
                              std::size_t kappa, RandomModelClass cls, Rng& rng) {
  validate_edges(num_qubits, edges);
  const std::size_t n = num_qubits;
  std::vector<GateErrorSpec> gates;
  for (std::size_t q = 0; q < n; ++q) {
    for (const char* ideal : {"x90", "y90", "z90"}) {
      const std::size_t t[] = {q};
      gates.push_back({gate_id(ideal, t), ideal, {q}, {}});
    }
  }
  for (auto [a, b] : edges) {
    const std::size_t t[] = {a, b};
    gates.push_back({gate_id("cz", t), "cz", {a, b}, {}});
  }
  const std::size_t real_gates = gates.size();
  const double label_space = std::pow(4.0, static_cast<double>(n)) - 1.0;
  const double kinds = cls == RandomModelClass::mixed ? 2.0 : 1.0;
  if (static_cast<double>(kappa) > label_space * kinds * static_cast<double>(real_gates)) {
    throw ModelError("random model: kappa exceeds the number of distinct generators");
  }

  std::set<std::tuple<std::size_t, int, std::string>> used;
  std::size_t placed = 0;
  static constexpr char kLetters[4] = {'I', 'X', 'Y', 'Z'};
  while (placed < kappa) {
    GeneratorKind kind = cls == RandomModelClass::stochastic ? GeneratorKind::S : GeneratorKind::H;
    if (cls == RandomModelClass::mixed && bernoulli(rng, 0.5)) kind = GeneratorKind::S;
    PauliString label(n);
    do {
      for (std::size_t q = 0; q < n; ++q) label.set_op(q, kLetters[uniform_index(rng, 4)]);
    } while (label.is_identity());
    const auto g = static_cast<std::size_t>(uniform_index(rng, real_gates));
    if (!used.insert({g, static_cast<int>(kind), label.label()}).second) continue;
    gates[g].errors.push_back({kind, std::move(label)});
    ++placed;
  }
  if (cls == RandomModelClass::mixed) {
    for (const char* pseudo : {"prep", "meas"}) {
      GateErrorSpec spec{pseudo, pseudo, {}, {}};
      for (std::size_t q = 0; q < n; ++q) {
        spec.errors.push_back({GeneratorKind::S, letters_on(n, {{q, 'X'}})});
      }
      gates.push_back(std::move(spec));
    }
  }
  return ErrorModel::create(n, std::move(gates));
}

}  // namespace lgst
