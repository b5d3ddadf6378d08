#pragma once

// JSON forms of GmiReport and RateAdaptPlan. Field names mirror the structs.

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "shapegain/constellation_io.hpp"
#include "shapegain/demapper.hpp"
#include "shapegain/rate_adaptation.hpp"

namespace shapegain {

inline nlohmann::json to_json_value(const GmiReport& r) {
  return {{"per_bit", r.per_bit},
          {"total", r.total},
          {"per_bit_dualpol", r.per_bit_dualpol},
          {"total_dualpol", r.total_dualpol},
          {"n_samples", r.n_samples},
          {"stderr_total", r.stderr_total}};
}

inline GmiReport gmi_report_from_json(const nlohmann::json& j) {
  try {
    GmiReport r = GmiReport::from_per_bit(j.at("per_bit").get<std::vector<double>>(),
                                          j.value("n_samples", std::size_t{0}), j.value("stderr_total", 0.0));
    if (j.contains("per_bit_dualpol")) {
      auto dual = j["per_bit_dualpol"].get<std::vector<double>>();
      if (dual.size() != 2 * r.per_bit.size()) throw IoError("per_bit_dualpol must have 2m entries");
      r.per_bit_dualpol = std::move(dual);
      r.total_dualpol = 0.0;
      for (double v : r.per_bit_dualpol) r.total_dualpol += v;
    }
    if (r.per_bit.empty()) throw IoError("per_bit is empty");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed GMI report: ") + e.what());
  }
}

inline nlohmann::json to_json_value(const RateAdaptPlan& p) {
  return {{"m", p.m},
          {"n_d", p.n_d},
          {"fec_rate", p.fec_rate.str()},
          {"dummy_positions", p.dummy_positions},
          {"net_rate", p.net_rate},
          {"data_gmi", p.data_gmi},
          {"per_pol_data_gmi", {p.per_pol_data_gmi.first, p.per_pol_data_gmi.second}}};
}

inline Rational rational_from_json(const nlohmann::json& j) {
  if (j.is_string()) return Rational::parse(j.get<std::string>());
  if (j.is_number_integer()) return Rational::parse(std::to_string(j.get<long long>()));
  throw IoError("FEC rate must be a string \"K/N\"");
}

inline RateAdaptPlan plan_from_json(const nlohmann::json& j) {
  try {
    RateAdaptPlan p;
    p.m = j.at("m").get<int>();
    p.n_d = j.at("n_d").get<int>();
    p.fec_rate = rational_from_json(j.at("fec_rate"));
    p.dummy_positions = j.at("dummy_positions").get<std::vector<int>>();
    std::sort(p.dummy_positions.begin(), p.dummy_positions.end());
    if (p.m < 1 || static_cast<int>(p.dummy_positions.size()) != p.n_d) {
      throw IoError("plan: dummy_positions must have n_d entries");
    }
    for (int d : p.dummy_positions) {
      if (d < 0 || d >= 2 * p.m) throw IoError("plan: dummy position out of range");
    }
    if (std::adjacent_find(p.dummy_positions.begin(), p.dummy_positions.end()) != p.dummy_positions.end()) {
      throw IoError("plan: duplicate dummy position");
    }
    p.net_rate = net_rate(p.m, p.n_d, p.fec_rate);
    p.data_gmi = j.value("data_gmi", 0.0);
    if (j.contains("per_pol_data_gmi")) {
      const auto& pp = j["per_pol_data_gmi"];
      p.per_pol_data_gmi = {pp.at(0).get<double>(), pp.at(1).get<double>()};
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed plan: ") + e.what());
  } catch (const ParameterError& e) {
    throw IoError(std::string("invalid plan: ") + e.what());
  }
}

inline GmiReport load_gmi_report(const std::filesystem::path& path) {
  return gmi_report_from_json(read_json_file(path));
}

inline RateAdaptPlan load_plan(const std::filesystem::path& path) { return plan_from_json(read_json_file(path)); }

}  // namespace shapegain
