#pragma once

// Result tables (CSV with `#` metadata lines, or JSON), atomic file output and
// the link configuration file.

#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "shape4d/fiber/params.hpp"

namespace shape4d {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

using Cell = std::variant<double, std::int64_t, std::string>;

struct SweepResult {
  int schemaVersion = kSchemaVersion;
  std::string command;
  std::uint64_t rngSeed = 0;
  std::string toolVersion = kToolVersion;
  /// Extra `key=value` lines (parameters that are constant over the table).
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("SweepResult: row width does not match the header");
    rows.push_back(std::move(row));
  }
};

enum class OutputFormat { csv, json };

inline OutputFormat parse_output_format(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw std::invalid_argument("unknown output format '" + s + "' (expected csv or json)");
}

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string format_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace detail

inline void write_csv(std::ostream& os, const SweepResult& r, bool timestamp) {
  os << "# schema_version=" << r.schemaVersion << '\n';
  os << "# command=" << r.command << '\n';
  os << "# rng_seed=" << r.rngSeed << '\n';
  os << "# tool_version=" << r.toolVersion << '\n';
  for (const auto& [k, v] : r.metadata) os << "# " << k << '=' << v << '\n';
  if (timestamp) os << "# generated=" << detail::utc_timestamp() << '\n';
  for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
  os << '\n';
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << detail::format_cell(row[i]);
    os << '\n';
  }
}

inline nlohmann::ordered_json to_json(const SweepResult& r, bool timestamp) {
  nlohmann::ordered_json j;
  j["schema_version"] = r.schemaVersion;
  j["command"] = r.command;
  j["rng_seed"] = r.rngSeed;
  j["tool_version"] = r.toolVersion;
  auto meta = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.metadata) meta[k] = v;
  j["metadata"] = meta;
  if (timestamp) j["generated"] = detail::utc_timestamp();
  j["columns"] = r.columns;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    auto obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::visit([&](const auto& v) { obj[r.columns[i]] = v; }, row[i]);
    }
    rows.push_back(std::move(obj));
  }
  j["rows"] = rows;
  return j;
}

inline std::string render(const SweepResult& r, OutputFormat f, bool timestamp) {
  std::ostringstream os;
  if (f == OutputFormat::csv) {
    write_csv(os, r, timestamp);
  } else {
    os << to_json(r, timestamp).dump(2) << '\n';
  }
  return os.str();
}

/// Write via a temporary file in the same directory and rename over `path`.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  const auto tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
  }
  std::filesystem::rename(tmp, path);
}

/// Link/fiber configuration file: a JSON object whose keys carry their units.
/// Absent keys keep their defaults; unknown keys are an error.
struct LinkSetup {
  fiber::LinkConfig link;
  fiber::FiberParams fiber;
};

inline nlohmann::ordered_json to_json(const LinkSetup& s) {
  const auto& l = s.link;
  const auto& f = s.fiber;
  return {
      {"n_channels", l.nChannels},
      {"symbol_rate_gbd", l.symbolRate_GBd},
      {"channel_spacing_ghz", l.channelSpacing_GHz},
      {"rrc_rolloff", l.rrcRolloff},
      {"rrc_span_symbols", l.rrcSpan_symbols},
      {"n_spans", l.nSpans},
      {"launch_power_per_channel_dbm", l.launchPowerPerChannel_dBm},
      {"edfa_noise_figure_db", l.edfaNoiseFigure_dB},
      {"samples_per_symbol", l.samplesPerSymbol},
      {"n_symbols_per_channel", l.nSymbolsPerChannel},
      {"rng_seed", l.rngSeed},
      {"dsp_block_symbols", l.dspBlock_symbols},
      {"alpha_db_per_km", f.alpha_dB_per_km},
      {"dispersion_ps_per_nm_km", f.dispersion_ps_per_nm_km},
      {"gamma_per_w_km", f.gamma_per_W_km},
      {"span_length_km", f.spanLength_km},
      {"step_size_km", f.stepSize_km},
      {"carrier_wavelength_nm", f.carrierWavelength_nm},
  };
}

inline LinkSetup link_setup_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("link config: top level must be an object");
  LinkSetup s;
  auto& l = s.link;
  auto& f = s.fiber;
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "n_channels") l.nChannels = v.get<std::size_t>();
      else if (key == "symbol_rate_gbd") l.symbolRate_GBd = v.get<double>();
      else if (key == "channel_spacing_ghz") l.channelSpacing_GHz = v.get<double>();
      else if (key == "rrc_rolloff") l.rrcRolloff = v.get<double>();
      else if (key == "rrc_span_symbols") l.rrcSpan_symbols = v.get<std::size_t>();
      else if (key == "n_spans") l.nSpans = v.get<std::size_t>();
      else if (key == "launch_power_per_channel_dbm") l.launchPowerPerChannel_dBm = v.get<double>();
      else if (key == "edfa_noise_figure_db") l.edfaNoiseFigure_dB = v.get<double>();
      else if (key == "samples_per_symbol") l.samplesPerSymbol = v.get<std::size_t>();
      else if (key == "n_symbols_per_channel") l.nSymbolsPerChannel = v.get<std::size_t>();
      else if (key == "rng_seed") l.rngSeed = v.get<std::uint64_t>();
      else if (key == "dsp_block_symbols") l.dspBlock_symbols = v.get<std::size_t>();
      else if (key == "alpha_db_per_km") f.alpha_dB_per_km = v.get<double>();
      else if (key == "dispersion_ps_per_nm_km") f.dispersion_ps_per_nm_km = v.get<double>();
      else if (key == "gamma_per_w_km") f.gamma_per_W_km = v.get<double>();
      else if (key == "span_length_km") f.spanLength_km = v.get<double>();
      else if (key == "step_size_km") f.stepSize_km = v.get<double>();
      else if (key == "carrier_wavelength_nm") f.carrierWavelength_nm = v.get<double>();
      else throw std::invalid_argument("link config: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("link config: bad value for '" + key + "': " + e.what());
    }
  }
  s.link.validate();
  s.fiber.validate();
  return s;
}

inline LinkSetup load_link_setup(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open link config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("link config '" + path.string() + "': " + e.what());
  }
  return link_setup_from_json(j);
}

}  // namespace shape4d
