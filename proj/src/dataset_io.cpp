#include "lgst/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "lgst/errors.hpp"
#include "lgst/model_io.hpp"

namespace lgst {

Dataset make_dataset(const ExperimentDesign& design, const SimulatedData& data) {
  const std::size_t m = design.observables.size();
  if (data.value.size() != design.num_rows()) {
    throw DimensionError("simulated data does not match the design");
  }
  Dataset out;
  out.meta = data.meta;
  out.rows.reserve(data.value.size());
  for (std::size_t c = 0; c < design.circuits.size(); ++c) {
    const std::string id = design.circuits[c].id();
    for (std::size_t k = 0; k < m; ++k) {
      out.rows.push_back({id, design.observables[k], data.ideal[c * m + k],
                          data.value[c * m + k], data.shots});
    }
  }
  return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension(".json");
  if (p == csv) p += ".json";
  return p;
}

void save_dataset(const std::filesystem::path& csv, const Dataset& data,
                  const std::string& manifest) {
  std::string text;
  if (!manifest.empty()) text += "# manifest: " + manifest + "\n";
  text += "circuit_id,observable,ideal,value,shots\n";
  char buf[64];
  for (const auto& r : data.rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    text += r.circuit_id + "," + r.observable.label() + "," + std::to_string(r.ideal) + "," + buf +
            "," + (r.shots == 0 ? std::string("inf") : std::to_string(r.shots)) + "\n";
  }
  write_text_file(csv, text);
  nlohmann::json meta = data.meta;
  if (!manifest.empty()) meta["manifest"] = manifest;
  write_text_file(sidecar_path(csv), meta.dump(1) + "\n");
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw FormatError("dataset line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& csv) {
  std::istringstream in(read_text_file(csv));
  Dataset out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_csv(line);
    if (!header) {
      if (f.size() < 5 || f[0] != "circuit_id" || f[1] != "observable" || f[2] != "ideal" ||
          f[3] != "value" || f[4] != "shots") {
        throw FormatError(csv.string() + ": expected header circuit_id,observable,ideal,value,shots");
      }
      header = true;
      continue;
    }
    if (f.size() != 5) {
      throw FormatError(csv.string() + " line " + std::to_string(lineno) + ": expected 5 fields");
    }
    DatasetRow r;
    r.circuit_id = f[0];
    try {
      r.observable = PauliString::from_string(f[1]);
    } catch (const Error& e) {
      throw FormatError(csv.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
    r.ideal = static_cast<int>(parse_double(f[2], lineno));
    r.value = parse_double(f[3], lineno);
    if (f[4] == "inf") {
      r.shots = 0;
    } else {
      const auto [p, ec] = std::from_chars(f[4].data(), f[4].data() + f[4].size(), r.shots);
      if (ec != std::errc() || p != f[4].data() + f[4].size() || r.shots == 0) {
        throw FormatError(csv.string() + " line " + std::to_string(lineno) + ": bad shot count");
      }
    }
    if (r.value < -1.0 || r.value > 1.0 || (r.ideal != 0 && r.ideal != 1 && r.ideal != -1)) {
      throw FormatError(csv.string() + " line " + std::to_string(lineno) + ": value out of range");
    }
    out.rows.push_back(std::move(r));
  }
  if (!header) throw FormatError(csv.string() + ": missing header");
  const auto side = sidecar_path(csv);
  if (std::filesystem::exists(side)) {
    try {
      out.meta = nlohmann::json::parse(read_text_file(side));
    } catch (const nlohmann::json::parse_error& ex) {
      throw FormatError(side.string() + ": " + ex.what());
    }
  }
  return out;
}

AlignedData align_dataset(const ExperimentDesign& design, const DesignMatrix& d,
                          const Dataset& data) {
  std::unordered_map<std::string, std::size_t> circuit_of;
  for (std::size_t c = 0; c < design.circuits.size(); ++c) circuit_of.emplace(design.circuits[c].id(), c);
  std::unordered_map<std::string, std::size_t> observable_of;
  for (std::size_t k = 0; k < design.observables.size(); ++k) {
    observable_of.emplace(design.observables[k].label(), k);
  }
  const std::size_t m = design.observables.size();
  std::vector<long> row_data(design.circuits.size() * m, -1);
  AlignedData out;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const auto& r = data.rows[i];
    auto c = circuit_of.find(r.circuit_id);
    auto k = observable_of.find(r.observable.label());
    if (c == circuit_of.end() || k == observable_of.end()) {
      ++out.unmatched_rows;
      continue;
    }
    row_data[c->second * m + k->second] = static_cast<long>(i);
  }

  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const std::size_t slot = std::size_t{d.circuit_index[r]} * m + d.observable_index[r];
    if (slot < row_data.size() && row_data[slot] >= 0) keep.push_back(r);
  }
  out.missing_rows = d.rows() - keep.size();
  out.value.resize(static_cast<Eigen::Index>(keep.size()));
  out.delta.resize(static_cast<Eigen::Index>(keep.size()));
  out.shots.resize(keep.size());
  DesignMatrix& sub = out.design;
  sub.column_kind = d.column_kind;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const std::size_t r = keep[i];
    const auto& row = data.rows[static_cast<std::size_t>(
        row_data[std::size_t{d.circuit_index[r]} * m + d.observable_index[r]])];
    if (row.ideal != d.ideal[r]) {
      throw FormatError("dataset row (" + row.circuit_id + ", " + row.observable.label() +
                        ") has ideal " + std::to_string(row.ideal) + ", design says " +
                        std::to_string(d.ideal[r]));
    }
    out.value(static_cast<Eigen::Index>(i)) = row.value;
    out.delta(static_cast<Eigen::Index>(i)) = row.value - row.ideal;
    out.shots[i] = row.shots;
    sub.circuit_index.push_back(d.circuit_index[r]);
    sub.observable_index.push_back(d.observable_index[r]);
    sub.ideal.push_back(d.ideal[r]);
  }
  std::vector<std::size_t> all_cols(d.cols());
  for (std::size_t c = 0; c < all_cols.size(); ++c) all_cols[c] = c;
  sub.matrix = d.block(keep, all_cols);
  return out;
}

}  // namespace lgst
