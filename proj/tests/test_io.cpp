#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "shape4d/io.hpp"

using namespace shape4d;

namespace {

SweepResult sample() {
  SweepResult r;
  r.command = "gmi-sweep --format 4d-os128";
  r.rngSeed = 42;
  r.metadata = {{"samples", "1000"}};
  r.columns = {"snr_db", "count", "name"};
  r.add_row({9.5, std::int64_t{3}, std::string("a")});
  r.add_row({0.1, std::int64_t{-1}, std::string("b")});
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Csv, MetadataThenHeaderThenRows) {
  const auto text = render(sample(), OutputFormat::csv, false);
  EXPECT_EQ(text,
            "# schema_version=1\n"
            "# command=gmi-sweep --format 4d-os128\n"
            "# rng_seed=42\n"
            "# tool_version=0.1.0\n"
            "# samples=1000\n"
            "snr_db,count,name\n"
            "9.5,3,a\n"
            "0.1,-1,b\n");
  EXPECT_NE(render(sample(), OutputFormat::csv, true).find("# generated="), std::string::npos);
}

TEST(Json, CarriesMetadataAndTypedRows) {
  const auto j = nlohmann::json::parse(render(sample(), OutputFormat::json, false));
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["rng_seed"], 42);
  EXPECT_EQ(j["tool_version"], "0.1.0");
  EXPECT_FALSE(j.contains("generated"));
  ASSERT_EQ(j["rows"].size(), 2U);
  EXPECT_DOUBLE_EQ(j["rows"][0]["snr_db"].get<double>(), 9.5);
  EXPECT_EQ(j["rows"][1]["count"], -1);
  EXPECT_EQ(j["rows"][1]["name"], "b");
}

TEST(SweepResult, RejectsRaggedRows) {
  auto r = sample();
  EXPECT_THROW(r.add_row({1.0}), std::invalid_argument);
  EXPECT_THROW((void)parse_output_format("xml"), std::invalid_argument);
}

TEST(AtomicWrite, ReplacesWholeFile) {
  const auto dir = std::filesystem::temp_directory_path() / "shape4d_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.csv";
  atomic_write(path, "first version, longer\n");
  atomic_write(path, "second\n");
  EXPECT_EQ(slurp(path), "second\n");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1U);
  EXPECT_THROW(atomic_write(dir / "missing" / "x.csv", "x"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(LinkSetup, RoundTripsAndValidates) {
  LinkSetup s;
  s.link.nSpans = 7;
  s.link.launchPowerPerChannel_dBm = 1.5;
  s.fiber.stepSize_km = 0.2;
  const auto back = link_setup_from_json(nlohmann::json::parse(to_json(s).dump()));
  EXPECT_EQ(back.link.nSpans, 7U);
  EXPECT_DOUBLE_EQ(back.link.launchPowerPerChannel_dBm, 1.5);
  EXPECT_DOUBLE_EQ(back.fiber.stepSize_km, 0.2);

  const auto defaults = link_setup_from_json(nlohmann::json::object());
  EXPECT_EQ(defaults.link.nChannels, 3U);
  EXPECT_THROW((void)link_setup_from_json(nlohmann::json{{"n_span", 3}}), std::invalid_argument);
  EXPECT_THROW((void)link_setup_from_json(nlohmann::json{{"n_spans", "ten"}}), std::invalid_argument);
  EXPECT_THROW((void)link_setup_from_json(nlohmann::json{{"step_size_km", -1.0}}), std::invalid_argument);
}

TEST(LinkSetup, ParseErrorNamesTheLine) {
  const auto path = std::filesystem::temp_directory_path() / "shape4d_bad_link.json";
  {
    std::ofstream out(path);
    out << "{\n  \"n_spans\": 3,\n  \"n_channels\": ,\n}\n";
  }
  try {
    (void)load_link_setup(path);
    FAIL() << "expected a parse error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::filesystem::remove(path);
}
