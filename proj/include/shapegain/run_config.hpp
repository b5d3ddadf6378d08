#pragma once

// Run configuration: one JSON document (comments allowed) with sections
// "link", "train", "sweep", "eval" and "output". Missing keys take the
// defaults of the corresponding structs.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapegain/channel.hpp"
#include "shapegain/constellation_io.hpp"
#include "shapegain/report_io.hpp"
#include "shapegain/training.hpp"

namespace shapegain {

enum class PowerMode { fixed, optimal };

struct SweepConfig {
  std::vector<int> span_grid{4, 8, 12, 16, 20, 24};
  PowerMode power_mode = PowerMode::optimal;
  double launch_power = 0.2;  // used when power_mode == fixed
  std::vector<std::string> schemes{"ae", "qam"};
  std::vector<int> qam_m_list;  // empty: {train.m, train.m - 1}
  // When false the QAM baseline uses n_d = 0 only (a fixed-rate QAM
  // staircase); when true it may also insert dummy bits.
  bool qam_dummy_bits = false;
};

struct EvalConfig {
  std::size_t n_samples = 200000;
  std::uint64_t seed = 7;
  double epsilon_mom = 0.01;
};

struct OutputConfig {
  std::string results;
  std::string constellation_dir;  // empty: do not persist AE constellations
};

struct RunConfig {
  LinkConfig link;
  TrainConfig train;
  SweepConfig sweep;
  EvalConfig eval;
  OutputConfig output;

  std::vector<int> qam_m_list() const {
    if (!sweep.qam_m_list.empty()) return sweep.qam_m_list;
    std::vector<int> ms{train.m};
    if (train.m > 1) ms.push_back(train.m - 1);
    return ms;
  }

  void validate() const {
    link.validate();
    train.validate();
    if (sweep.span_grid.empty()) throw ParameterError("sweep: span_grid must be nonempty");
    for (std::size_t i = 0; i < sweep.span_grid.size(); ++i) {
      if (sweep.span_grid[i] < 1) throw ParameterError("sweep: span counts must be >= 1");
      if (i > 0 && sweep.span_grid[i] <= sweep.span_grid[i - 1]) {
        throw ParameterError("sweep: span_grid must be strictly increasing");
      }
    }
    if (sweep.power_mode == PowerMode::fixed && !(sweep.launch_power > 0.0)) {
      throw ParameterError("sweep: fixed launch_power must be > 0");
    }
    if (sweep.schemes.empty()) throw ParameterError("sweep: schemes must be nonempty");
    for (const auto& s : sweep.schemes) {
      if (s != "ae" && s != "qam") throw ParameterError("sweep: unknown scheme '" + s + "'");
    }
    for (int m : qam_m_list()) {
      if (m < 1 || m > kMaxBits) throw ParameterError("sweep: qam m outside [1, 10]");
    }
    if (eval.n_samples == 0) throw ParameterError("eval: n_samples must be > 0");
    if (!(eval.epsilon_mom > 0.0)) throw ParameterError("eval: epsilon_mom must be > 0");
  }
};

namespace detail {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

inline LinkConfig link_from_json(const nlohmann::json& j) {
  LinkConfig l;
  read_opt(j, "n_spans", l.n_spans);
  read_opt(j, "span_length_km", l.span_length_km);
  read_opt(j, "ase_var_per_span", l.ase_var_per_span);
  read_opt(j, "chi1", l.chi1);
  read_opt(j, "chi2", l.chi2);
  read_opt(j, "chi3", l.chi3);
  read_opt(j, "eps_accum", l.eps_accum);
  read_opt(j, "n_channels", l.n_channels);
  if (j.contains("fec_rate")) l.fec_rate = rational_from_json(j["fec_rate"]);
  return l;
}

inline DemapperMode demapper_mode_from(const std::string& s) {
  if (s == "gaussian") return DemapperMode::gaussian;
  if (s == "mlp") return DemapperMode::mlp;
  throw ParameterError("train: unknown demapper_mode '" + s + "'");
}

inline TrainConfig train_from_json(const nlohmann::json& j, const LinkConfig& link) {
  TrainConfig t;
  read_opt(j, "m", t.m);
  if (j.contains("target")) {
    const auto& tj = j["target"];
    if (tj.contains("snr_db")) {
      t.target = SnrTarget{tj["snr_db"].get<double>()};
    } else if (tj.contains("link")) {
      LinkTarget lt{link, std::nullopt};
      if (tj.contains("launch_power") && tj["launch_power"].is_number()) {
        lt.launch_power = tj["launch_power"].get<double>();
      } else if (tj.contains("launch_power") && tj["launch_power"] != "optimal") {
        throw ParameterError("train.target.launch_power must be a number or \"optimal\"");
      }
      t.target = lt;
    } else {
      throw ParameterError("train.target needs \"snr_db\" or \"link\"");
    }
  }
  if (j.contains("demapper_mode")) t.demapper_mode = demapper_mode_from(j["demapper_mode"].get<std::string>());
  if (j.contains("mlp")) {
    const auto& mj = j["mlp"];
    read_opt(mj, "hidden", t.mlp.hidden);
    if (mj.contains("activation")) {
      const auto a = mj["activation"].get<std::string>();
      if (a == "relu") {
        t.mlp.activation = Activation::relu;
      } else if (a == "tanh") {
        t.mlp.activation = Activation::tanh;
      } else {
        throw ParameterError("train.mlp: unknown activation '" + a + "'");
      }
    }
  }
  read_opt(j, "iterations", t.iterations);
  read_opt(j, "batch_symbols", t.batch_symbols);
  read_opt(j, "learning_rate", t.adam.learning_rate);
  read_opt(j, "adam_beta1", t.adam.beta1);
  read_opt(j, "adam_beta2", t.adam.beta2);
  read_opt(j, "adam_eps", t.adam.eps);
  read_opt(j, "seed", t.seed);
  if (j.contains("init")) {
    const auto s = j["init"].get<std::string>();
    if (s == "qam") {
      t.init = InitMode::qam;
    } else if (s == "random") {
      t.init = InitMode::random;
    } else {
      throw ParameterError("train: unknown init '" + s + "'");
    }
  }
  read_opt(j, "init_jitter", t.init_jitter);
  read_opt(j, "refresh_every", t.refresh_every);
  return t;
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  try {
    RunConfig c;
    if (j.contains("link")) c.link = detail::link_from_json(j["link"]);
    if (j.contains("train")) c.train = detail::train_from_json(j["train"], c.link);
    if (j.contains("sweep")) {
      const auto& s = j["sweep"];
      detail::read_opt(s, "span_grid", c.sweep.span_grid);
      if (s.contains("power_mode")) {
        const auto pm = s["power_mode"].get<std::string>();
        if (pm == "fixed") {
          c.sweep.power_mode = PowerMode::fixed;
        } else if (pm == "optimal") {
          c.sweep.power_mode = PowerMode::optimal;
        } else {
          throw ParameterError("sweep: unknown power_mode '" + pm + "'");
        }
      }
      detail::read_opt(s, "launch_power", c.sweep.launch_power);
      if (s.contains("launch_power_db")) c.sweep.launch_power = db_to_linear(s["launch_power_db"].get<double>());
      detail::read_opt(s, "schemes", c.sweep.schemes);
      detail::read_opt(s, "qam_m_list", c.sweep.qam_m_list);
      detail::read_opt(s, "qam_dummy_bits", c.sweep.qam_dummy_bits);
    }
    if (j.contains("eval")) {
      const auto& e = j["eval"];
      detail::read_opt(e, "n_samples", c.eval.n_samples);
      detail::read_opt(e, "seed", c.eval.seed);
      detail::read_opt(e, "epsilon_mom", c.eval.epsilon_mom);
    }
    if (j.contains("output")) {
      detail::read_opt(j["output"], "results", c.output.results);
      detail::read_opt(j["output"], "constellation_dir", c.output.constellation_dir);
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("invalid run configuration: ") + e.what());
  }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return run_config_from_json(read_json_file(path));
  } catch (const ParameterError& e) {
    throw ParameterError(path.string() + ": " + e.what());
  }
}

}  // namespace shapegain
