#include "lgst/design_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "lgst/errors.hpp"
#include "lgst/model_io.hpp"

namespace lgst {

namespace {

constexpr char kMagic[8] = {'L', 'G', 'S', 'T', 'D', 'M', '0', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw FormatError("design matrix cache is truncated");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace

void save_design(const std::filesystem::path& path, const ExperimentDesign& design) {
  write_text_file(path, design_to_json(design).dump() + "\n");
}

ExperimentDesign load_design(const std::filesystem::path& path) {
  try {
    return design_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::parse_error& ex) {
    throw FormatError(path.string() + ": " + ex.what());
  }
}

void save_design_matrix(const std::filesystem::path& path, const DesignMatrix& d) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  const std::uint64_t k = d.rows(), kappa = d.cols();
  const auto nnz = static_cast<std::uint64_t>(d.matrix.nonZeros());
  out.write(kMagic, sizeof kMagic);
  put(out, k);
  put(out, kappa);
  put(out, nnz);
  for (auto kind : d.column_kind) put<std::uint8_t>(out, kind == GeneratorKind::S ? 1 : 0);
  std::vector<std::uint8_t> bitmap((k + 7) / 8, 0);
  for (std::size_t r = 0; r < k; ++r) {
    if (d.ideal[r] != 0) bitmap[r / 8] |= static_cast<std::uint8_t>(1u << (r % 8));
  }
  for (auto b : bitmap) put(out, b);
  for (auto v : d.ideal) put(out, v);
  for (auto v : d.circuit_index) put(out, v);
  for (auto v : d.observable_index) put(out, v);
  for (std::size_t r = 0; r < k; ++r) {
    for (SparseRowMatrix::InnerIterator it(d.matrix, static_cast<int>(r)); it; ++it) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(r));
      put<std::uint32_t>(out, static_cast<std::uint32_t>(it.col()));
      put<double>(out, it.value());
    }
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

DesignMatrix load_design_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw FormatError(path.string() + " is not a design matrix cache");
  }
  const auto k = get<std::uint64_t>(in);
  const auto kappa = get<std::uint64_t>(in);
  const auto nnz = get<std::uint64_t>(in);
  if (k > (1ull << 31) || kappa > (1ull << 31)) throw FormatError("design matrix too large");

  DesignMatrix d;
  for (std::uint64_t c = 0; c < kappa; ++c) {
    d.column_kind.push_back(get<std::uint8_t>(in) ? GeneratorKind::S : GeneratorKind::H);
  }
  std::vector<std::uint8_t> bitmap((k + 7) / 8);
  for (auto& b : bitmap) b = get<std::uint8_t>(in);
  d.ideal.resize(k);
  d.circuit_index.resize(k);
  d.observable_index.resize(k);
  for (auto& v : d.ideal) v = get<std::int8_t>(in);
  for (auto& v : d.circuit_index) v = get<std::uint32_t>(in);
  for (auto& v : d.observable_index) v = get<std::uint32_t>(in);
  for (std::size_t r = 0; r < k; ++r) {
    const bool s_row = (bitmap[r / 8] >> (r % 8)) & 1u;
    if (s_row != (d.ideal[r] != 0)) throw FormatError("partition bitmap disagrees with ideal values");
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(nnz);
  for (std::uint64_t i = 0; i < nnz; ++i) {
    const auto r = get<std::uint32_t>(in);
    const auto c = get<std::uint32_t>(in);
    const auto v = get<double>(in);
    if (r >= k || c >= kappa) throw FormatError("design matrix entry out of range");
    trip.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
  }
  d.matrix.resize(static_cast<int>(k), static_cast<int>(kappa));
  d.matrix.setFromTriplets(trip.begin(), trip.end());
  return d;
}

}  // namespace lgst
