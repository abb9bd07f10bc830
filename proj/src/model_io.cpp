#include "lgst/model_io.hpp"

#include <fstream>
#include <tuple>
#include <sstream>

#include "lgst/errors.hpp"

namespace lgst {

nlohmann::json model_to_json(const ErrorModel& model, const RateVector* rates) {
  nlohmann::json gates = nlohmann::json::array();
  for (const auto& g : model.gates()) {
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& e : g.errors) {
      errors.push_back({{"kind", std::string(1, kind_char(e.kind))}, {"pauli", e.label.label()}});
    }
    gates.push_back({{"id", g.id}, {"targets", g.targets}, {"ideal", g.ideal}, {"errors", errors}});
  }
  nlohmann::json j = {{"n", model.num_qubits()}, {"gates", gates}};
  if (rates) {
    if (rates->size() != model.num_parameters()) {
      throw DimensionError("rate vector length does not match the model");
    }
    j["rates"] = rates->values;
  }
  if (!model.recipe().empty()) j["recipe"] = nlohmann::json::parse(model.recipe());
  return j;
}

LoadedModel model_from_json(const nlohmann::json& j) {
  std::vector<GateErrorSpec> gates;
  std::size_t n = 0;
  try {
    n = j.at("n").get<std::size_t>();
    for (const auto& g : j.at("gates")) {
      GateErrorSpec spec;
      spec.id = g.at("id").get<std::string>();
      spec.ideal = g.at("ideal").get<std::string>();
      spec.targets = g.value("targets", std::vector<std::size_t>{});
      for (const auto& e : g.value("errors", nlohmann::json::array())) {
        PauliString label = PauliString::from_string(e.at("pauli").get<std::string>());
        spec.errors.push_back({parse_kind(e.at("kind").get<std::string>()), std::move(label)});
      }
      gates.push_back(std::move(spec));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("model file: ") + ex.what());
  }

  // File order of the rates follows the file order of the errors; map it onto the
  // canonical parameter order after construction.
  std::vector<std::tuple<std::string, GeneratorKind, PauliString>> file_order;
  for (const auto& g : gates) {
    for (const auto& e : g.errors) file_order.emplace_back(g.id, e.kind, e.label);
  }

  LoadedModel out{ErrorModel::create(n, std::move(gates)), std::nullopt};
  if (j.contains("recipe")) out.model.set_recipe(j["recipe"].dump());
  if (j.contains("rates")) {
    std::vector<double> values;
    try {
      values = j["rates"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(std::string("model file rates: ") + ex.what());
    }
    if (values.size() != out.model.num_parameters()) {
      throw FormatError("model file has " + std::to_string(values.size()) + " rates for " +
                        std::to_string(out.model.num_parameters()) + " parameters");
    }
    RateVector rates = RateVector::zeros(out.model);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto& [gate, kind, label] = file_order[i];
      rates[*out.model.parameter_index(gate, kind, label)] = values[i];
    }
    out.rates = std::move(rates);
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed for " + path.string());
}

void save_model(const std::filesystem::path& path, const ErrorModel& model,
                const RateVector* rates) {
  write_text_file(path, model_to_json(model, rates).dump(1) + "\n");
}

LoadedModel load_model(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& ex) {
    throw FormatError(path.string() + ": " + ex.what());
  }
  return model_from_json(j);
}

std::string model_ref(const ErrorModel& model) {
  nlohmann::json j = model_to_json(model);
  j.erase("recipe");
  return hex64(fnv1a64(j.dump()));
}

}  // namespace lgst
