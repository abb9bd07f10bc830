#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "lgst/design.hpp"
#include "lgst/simulator.hpp"

namespace lgst {

struct DatasetRow {
  std::string circuit_id;
  PauliString observable;
  int ideal = 0;
  double value = 0.0;
  std::uint64_t shots = 0;  // 0 = infinitely many
};

struct Dataset {
  std::vector<DatasetRow> rows;
  nlohmann::json meta = nlohmann::json::object();  // sidecar content
};

Dataset make_dataset(const ExperimentDesign& design, const SimulatedData& data);

/// CSV "circuit_id,observable,ideal,value,shots" (shots "inf" when unlimited) preceded by a
/// "# manifest: <hash>" line when `manifest` is non-empty, plus a JSON sidecar next to it
/// (same stem, .json extension).
void save_dataset(const std::filesystem::path& csv, const Dataset& data,
                  const std::string& manifest = {});
/// Reads the CSV and, when present, its sidecar.
Dataset load_dataset(const std::filesystem::path& csv);
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// Dataset rows matched to design rows by (circuit id, observable). Design rows without
/// data are dropped from `design`; data rows not in the design are counted and ignored.
struct AlignedData {
  DesignMatrix design;
  Eigen::VectorXd value;
  Eigen::VectorXd delta;  // value - ideal
  std::vector<std::uint64_t> shots;
  std::size_t missing_rows = 0;
  std::size_t unmatched_rows = 0;
};

/// Throws FormatError when a dataset row disagrees with the design's ideal value.
AlignedData align_dataset(const ExperimentDesign& design, const DesignMatrix& d,
                          const Dataset& data);

}  // namespace lgst
