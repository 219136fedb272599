#pragma once

// Text format for labeled constellations:
//
//   #4dshape v1 N=<int> m=<int> Es=<float>
//   <N floats> | <m bits>      (2^m rows)

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "shape4d/constellation.hpp"

namespace shape4d {

class ConstellationParseError : public std::runtime_error {
 public:
  ConstellationParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline void write_constellation(std::ostream& os, const LabeledConstellation& c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", c.mean_energy());
  os << "#4dshape v1 N=" << c.dims() << " m=" << c.bits() << " Es=" << buf << '\n';
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (double v : c.point(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << buf << ' ';
    }
    os << '|';
    for (std::size_t k = 0; k < c.bits(); ++k) os << ' ' << c.bit(i, k);
    os << '\n';
  }
}

[[nodiscard]] inline std::string to_text(const LabeledConstellation& c) {
  std::ostringstream os;
  write_constellation(os, c);
  return os.str();
}

namespace detail {

inline bool parse_header_field(const std::string& token, const char* key, std::string& value) {
  const std::string prefix = std::string(key) + "=";
  if (token.rfind(prefix, 0) != 0) return false;
  value = token.substr(prefix.size());
  return true;
}

inline double parse_double(const std::string& s, std::size_t line, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConstellationParseError(line, std::string("invalid ") + what + " '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) {
    throw ConstellationParseError(line, std::string("invalid ") + what + " '" + s + "'");
  }
  return v;
}

inline std::size_t parse_count(const std::string& s, std::size_t line, const char* what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw ConstellationParseError(line, std::string("invalid ") + what + " '" + s + "'");
  }
  return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace detail

/// Parse the text format. Errors carry the 1-based line number; the declared
/// Es must match the data to 1e-3 relative.
[[nodiscard]] inline LabeledConstellation read_constellation(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw ConstellationParseError(1, "missing header");
  ++lineno;
  std::istringstream header(line);
  std::string magic, version, tok_n, tok_m, tok_es, extra;
  header >> magic >> version >> tok_n >> tok_m >> tok_es;
  if (magic != "#4dshape" || version != "v1") throw ConstellationParseError(lineno, "expected '#4dshape v1' header");
  std::string sn, sm, ses;
  if (!detail::parse_header_field(tok_n, "N", sn) || !detail::parse_header_field(tok_m, "m", sm) ||
      !detail::parse_header_field(tok_es, "Es", ses) || (header >> extra)) {
    throw ConstellationParseError(lineno, "header must be '#4dshape v1 N=<int> m=<int> Es=<float>'");
  }
  const std::size_t dims = detail::parse_count(sn, lineno, "N");
  const std::size_t bits = detail::parse_count(sm, lineno, "m");
  const double es = detail::parse_double(ses, lineno, "Es");
  if (dims == 0 || dims > 64) throw ConstellationParseError(lineno, "N out of range");
  if (bits == 0 || bits > kMaxLabelBits) throw ConstellationParseError(lineno, "m out of range");

  const std::size_t rows = std::size_t{1} << bits;
  std::vector<double> pts;
  std::vector<Label> labels;
  pts.reserve(rows * dims);
  labels.reserve(rows);
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto bar = line.find('|');
    if (bar == std::string::npos) throw ConstellationParseError(lineno, "missing '|' delimiter");
    std::istringstream left(line.substr(0, bar));
    std::istringstream right(line.substr(bar + 1));
    std::string tok;
    std::size_t ncoord = 0;
    while (left >> tok) {
      pts.push_back(detail::parse_double(tok, lineno, "coordinate"));
      ++ncoord;
    }
    if (ncoord != dims) {
      throw ConstellationParseError(lineno, "expected " + std::to_string(dims) + " coordinates, got " +
                                                std::to_string(ncoord));
    }
    Label label = 0;
    std::size_t nbits = 0;
    while (right >> tok) {
      if (tok != "0" && tok != "1") throw ConstellationParseError(lineno, "label bit must be 0 or 1, got '" + tok + "'");
      label = (label << 1) | static_cast<Label>(tok == "1");
      ++nbits;
    }
    if (nbits != bits) {
      throw ConstellationParseError(lineno, "expected " + std::to_string(bits) + " label bits, got " +
                                                std::to_string(nbits));
    }
    if (labels.size() == rows) throw ConstellationParseError(lineno, "more than 2^m rows");
    labels.push_back(label);
  }
  if (labels.size() != rows) {
    throw ConstellationParseError(lineno, "expected " + std::to_string(rows) + " rows, got " +
                                              std::to_string(labels.size()));
  }
  LabeledConstellation c;
  try {
    c = LabeledConstellation(dims, bits, std::move(pts), std::move(labels));
  } catch (const std::invalid_argument& e) {
    throw ConstellationParseError(lineno, e.what());
  }
  if (std::abs(c.mean_energy() - es) > 1e-3 * std::max(es, 1e-300)) {
    throw ConstellationParseError(1, "declared Es does not match the mean point energy");
  }
  return c;
}

[[nodiscard]] inline LabeledConstellation from_text(const std::string& text) {
  std::istringstream is(text);
  return read_constellation(is);
}

[[nodiscard]] inline LabeledConstellation load_constellation(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_constellation(in);
}

}  // namespace shape4d
