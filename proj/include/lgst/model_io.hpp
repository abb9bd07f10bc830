#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "lgst/error_model.hpp"

namespace lgst {

struct LoadedModel {
  ErrorModel model;
  std::optional<RateVector> rates;
};

/// {n, gates: [{id, targets, ideal, errors: [{kind, pauli}]}], rates?, recipe?}
nlohmann::json model_to_json(const ErrorModel& model, const RateVector* rates = nullptr);
/// Throws FormatError for malformed JSON and ModelError for an invalid model.
LoadedModel model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const ErrorModel& model,
                const RateVector* rates = nullptr);
LoadedModel load_model(const std::filesystem::path& path);

/// Content hash of the model structure (rates excluded).
std::string model_ref(const ErrorModel& model);

/// Reads a whole file / writes one atomically enough for batch use (truncate + write).
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace lgst
