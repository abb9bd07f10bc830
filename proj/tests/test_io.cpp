#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "lgst/dataset_io.hpp"
#include "lgst/errors.hpp"
#include "lgst/model_io.hpp"
#include "lgst/simulator.hpp"

namespace {

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "lgst_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

struct Fixture {
  lgst::GeneratedModel gm = lgst::build_paper_model(3, lgst::ring_edges(3), 2);
  lgst::ExperimentDesign design = lgst::generate_design(3, 5, 4, 2, lgst::ring_edges(3), {}, 9);
  lgst::DesignMatrix d = lgst::build_design(design, gm.model);
  lgst::SimulatedData data;
  Fixture(std::uint64_t shots = 0) {
    lgst::SimulatorConfig cfg;
    cfg.backend = lgst::Backend::dense;
    cfg.shots = shots;
    data = lgst::simulate_design(design, gm.model, gm.rates, cfg);
  }
};

}  // namespace

TEST(DatasetIo, RoundTripIsBitExact) {
  for (std::uint64_t shots : {0ull, 250ull}) {
    Fixture f(shots);
    const auto ds = lgst::make_dataset(f.design, f.data);
    ASSERT_EQ(ds.rows.size(), f.design.num_rows());
    const auto path = temp_file("data.csv");
    lgst::save_dataset(path, ds, "abc123");
    EXPECT_TRUE(std::filesystem::exists(lgst::sidecar_path(path)));
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    EXPECT_EQ(first, "# manifest: abc123");
    const auto back = lgst::load_dataset(path);
    ASSERT_EQ(back.rows.size(), ds.rows.size());
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
      EXPECT_EQ(back.rows[i].circuit_id, ds.rows[i].circuit_id);
      EXPECT_EQ(back.rows[i].observable, ds.rows[i].observable);
      EXPECT_EQ(back.rows[i].ideal, ds.rows[i].ideal);
      EXPECT_EQ(back.rows[i].value, ds.rows[i].value);
      EXPECT_EQ(back.rows[i].shots, shots);
    }
    auto meta = back.meta;
    EXPECT_EQ(meta.value("manifest", ""), "abc123");
    meta.erase("manifest");
    EXPECT_EQ(meta, ds.meta);
  }
}

TEST(DatasetIo, AlignDropsMissingRowsAndCountsExtras) {
  Fixture f;
  auto ds = lgst::make_dataset(f.design, f.data);
  const auto full = lgst::align_dataset(f.design, f.d, ds);
  EXPECT_EQ(full.missing_rows, 0u);
  EXPECT_EQ(full.design.rows(), f.d.rows());
  for (std::size_t r = 0; r < f.d.rows(); ++r) {
    EXPECT_EQ(full.value[static_cast<Eigen::Index>(r)], f.data.value[r]);
    EXPECT_EQ(full.delta[static_cast<Eigen::Index>(r)], f.data.value[r] - f.d.ideal[r]);
  }
  auto extra = ds.rows.front();
  extra.circuit_id = "not-a-circuit";
  std::reverse(ds.rows.begin(), ds.rows.end());
  ds.rows.erase(ds.rows.begin(), ds.rows.begin() + 3);
  ds.rows.push_back(extra);
  const auto part = lgst::align_dataset(f.design, f.d, ds);
  EXPECT_EQ(part.missing_rows, 3u);
  EXPECT_EQ(part.unmatched_rows, 1u);
  EXPECT_EQ(part.design.rows(), f.d.rows() - 3);
  EXPECT_EQ(part.value.size(), static_cast<Eigen::Index>(f.d.rows() - 3));
}

TEST(DatasetIo, IdealMismatchIsRejected) {
  Fixture f;
  auto ds = lgst::make_dataset(f.design, f.data);
  ds.rows[0].ideal = ds.rows[0].ideal == 0 ? 1 : 0;
  EXPECT_THROW(lgst::align_dataset(f.design, f.d, ds), lgst::FormatError);
}

TEST(DatasetIo, MalformedCsv) {
  const auto path = temp_file("bad.csv");
  {
    std::ofstream out(path);
    out << "circuit_id,observable,ideal,value,shots\nabc,ZZ,1,notanumber,inf\n";
  }
  std::filesystem::remove(lgst::sidecar_path(path));
  EXPECT_THROW(lgst::load_dataset(path), lgst::FormatError);
}

TEST(ModelFile, RoundTripWithRates) {
  Fixture f;
  const auto path = temp_file("model.json");
  lgst::save_model(path, f.gm.model, &f.gm.rates);
  const auto back = lgst::load_model(path);
  ASSERT_TRUE(back.rates.has_value());
  EXPECT_EQ(back.rates->values, f.gm.rates.values);
  EXPECT_EQ(lgst::model_ref(back.model), lgst::model_ref(f.gm.model));
}
