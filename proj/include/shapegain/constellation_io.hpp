#pragma once

// JSON persistence of constellations:
//   {"version": 1, "m": 4, "points": [[I, Q], ...],
//    "metadata": {"generator": ..., "trained_snr_db": ..., "seed": ...}}
// Points are written in label order with round-trip (17 significant digit)
// precision.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "shapegain/constellation.hpp"
#include "shapegain/errors.hpp"

namespace shapegain {

inline constexpr int kConstellationFormatVersion = 1;

inline nlohmann::json to_json_value(const Constellation& c) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : c.points()) pts.push_back({p.real(), p.imag()});
  const auto& md = c.metadata();
  nlohmann::json meta;
  meta["generator"] = md.generator;
  meta["trained_snr_db"] = md.trained_snr_db ? nlohmann::json(*md.trained_snr_db) : nlohmann::json(nullptr);
  meta["seed"] = md.seed ? nlohmann::json(*md.seed) : nlohmann::json(nullptr);
  return {{"version", kConstellationFormatVersion}, {"m", c.bits()}, {"points", pts}, {"metadata", meta}};
}

inline Constellation constellation_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("version").get<int>();
    if (version != kConstellationFormatVersion) {
      throw IoError("unsupported constellation format version " + std::to_string(version));
    }
    const int m = j.at("m").get<int>();
    std::vector<cplx> pts;
    for (const auto& p : j.at("points")) {
      if (!p.is_array() || p.size() != 2) throw IoError("constellation point must be [I, Q]");
      pts.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    ConstellationMetadata md;
    if (j.contains("metadata")) {
      const auto& meta = j["metadata"];
      if (meta.contains("generator") && meta["generator"].is_string()) md.generator = meta["generator"];
      if (meta.contains("trained_snr_db") && meta["trained_snr_db"].is_number())
        md.trained_snr_db = meta["trained_snr_db"].get<double>();
      if (meta.contains("seed") && meta["seed"].is_number_integer())
        md.seed = meta["seed"].get<std::uint64_t>();
    }
    return Constellation(m, std::move(pts), std::move(md));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed constellation document: ") + e.what());
  } catch (const ParameterError& e) {
    throw IoError(std::string("invalid constellation document: ") + e.what());
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

// Comments (// and /* */) are accepted so shipped configs can be annotated.
inline nlohmann::json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("cannot parse JSON in '" + origin + "': " + e.what());
  }
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  return parse_json_text(read_text_file(path), path.string());
}

inline std::string dump_constellation(const Constellation& c) { return to_json_value(c).dump(2) + "\n"; }

inline void save_constellation(const Constellation& c, const std::filesystem::path& path) {
  write_text_file(path, dump_constellation(c));
}

inline Constellation load_constellation(const std::filesystem::path& path) {
  try {
    return constellation_from_json(read_json_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace shapegain
