#include "lgst/circuit.hpp"

#include <cstdio>

#include "lgst/clifford.hpp"
#include "lgst/errors.hpp"

namespace lgst {

Circuit::Circuit(std::size_t num_qubits, std::vector<Layer> layers)
    : n_(num_qubits), layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    std::vector<bool> used(n_, false);
    for (const auto& g : layers_[l]) {
      const int arity = gate_arity(g.gate);
      if (!is_known_gate(g.gate) || arity == 0) {
        throw DesignError("layer " + std::to_string(l) + ": unknown gate '" + g.gate + "'");
      }
      if (g.targets.size() != static_cast<std::size_t>(arity)) {
        throw DesignError("layer " + std::to_string(l) + ": gate '" + g.gate +
                          "' has the wrong number of targets");
      }
      for (auto q : g.targets) {
        if (q >= n_) throw DesignError("layer " + std::to_string(l) + ": target out of range");
        if (used[q]) {
          throw DesignError("layer " + std::to_string(l) + ": qubit " + std::to_string(q) +
                            " targeted twice");
        }
        used[q] = true;
      }
    }
  }
}

std::string Circuit::id() const { return hex64(fnv1a64(to_json(*this).dump())); }

nlohmann::json to_json(const Circuit& c) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : c.layers()) {
    nlohmann::json gates = nlohmann::json::array();
    for (const auto& g : layer) gates.push_back({{"gate", g.gate}, {"targets", g.targets}});
    layers.push_back(std::move(gates));
  }
  return {{"n", c.num_qubits()}, {"layers", std::move(layers)}};
}

Circuit circuit_from_json(const nlohmann::json& j) {
  try {
    std::vector<Layer> layers;
    for (const auto& jl : j.at("layers")) {
      Layer layer;
      for (const auto& jg : jl) {
        layer.push_back({jg.at("gate").get<std::string>(),
                         jg.at("targets").get<std::vector<std::size_t>>()});
      }
      layers.push_back(std::move(layer));
    }
    return Circuit(j.at("n").get<std::size_t>(), std::move(layers));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("circuit: ") + e.what());
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace lgst
