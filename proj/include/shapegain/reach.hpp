#pragma once

// Reach-versus-rate sweeps (learned constellation vs uniform QAM over a
// grid of span counts), reach lookup, results CSV and transmitter LUT
// export.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "shapegain/channel.hpp"
#include "shapegain/constellation.hpp"
#include "shapegain/constellation_io.hpp"
#include "shapegain/demapper.hpp"
#include "shapegain/rate_adaptation.hpp"
#include "shapegain/run_config.hpp"
#include "shapegain/training.hpp"

namespace shapegain {

struct SweepRow {
  int n_spans = 0;
  double distance_km = 0.0;
  double launch_power = 0.0;
  double snr_eff_db = 0.0;
  std::string scheme;
  int n_d = 0;
  double data_gmi = 0.0;
  double net_rate = 0.0;
  bool feasible = false;
  // Not part of the CSV.
  int m = 0;
  double gmi_stderr_dualpol = 0.0;
  RateAdaptPlan plan;
};

struct SweepFailure {
  std::string scheme;
  int n_spans = 0;
  std::string message;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by (scheme, n_spans)
  std::vector<SweepFailure> failures;
  std::vector<std::pair<int, Constellation>> ae_constellations;  // by n_spans
};

/// SplitMix64 finalizer, used to derive per-grid-point seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t grid_seed(std::uint64_t seed, int n_spans) {
  return seed ^ mix_seed(static_cast<std::uint64_t>(n_spans));
}

/// Launch power for a constellation on a link under the given power mode.
inline double resolve_launch_power(const LinkConfig& link, const SweepConfig& sweep, const Moments& mom) {
  if (sweep.power_mode == PowerMode::fixed) return sweep.launch_power;
  return optimal_launch_power(link, mom).launch_power;
}

/// One sweep row for a given constellation: channel, MC GMI, best plan.
/// max_n_d < 0 allows any number of dummy bits.
inline SweepRow evaluate_row(const Constellation& c, const LinkConfig& link, const SweepConfig& sweep,
                             const EvalConfig& eval, const std::string& scheme, int max_n_d = -1) {
  const auto mom = moments(c);
  const double power = resolve_launch_power(link, sweep, mom);
  const auto ch = effective_snr(link, power, mom);
  std::mt19937_64 rng(eval.seed);
  const auto report = per_bit_gmi_mc(c, ch.noise_variance, eval.n_samples, rng);
  SweepRow row;
  row.n_spans = link.n_spans;
  row.distance_km = link.distance_km();
  row.launch_power = power;
  row.snr_eff_db = ch.snr_db();
  row.scheme = scheme;
  row.plan = best_plan(report, link.fec_rate, max_n_d);
  row.n_d = row.plan.n_d;
  row.data_gmi = row.plan.data_gmi;
  row.net_rate = row.plan.net_rate;
  row.feasible = row.data_gmi >= row.net_rate;
  row.m = c.bits();
  row.gmi_stderr_dualpol = 2.0 * report.stderr_total;
  return row;
}

inline TrainConfig sweep_train_config(const RunConfig& config, int n_spans) {
  TrainConfig tc = config.train;
  LinkConfig link = config.link;
  link.n_spans = n_spans;
  LinkTarget target{link, std::nullopt};
  if (config.sweep.power_mode == PowerMode::fixed) target.launch_power = config.sweep.launch_power;
  tc.target = target;
  tc.seed = grid_seed(config.train.seed, n_spans);
  return tc;
}

/// Number of sweep workers from SHAPEGAIN_THREADS; serial when unset.
inline unsigned sweep_thread_count() {
  const char* env = std::getenv("SHAPEGAIN_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  const long n = std::strtol(env, nullptr, 10);
  return n > 1 ? static_cast<unsigned>(n) : 1U;
}

/// Runs every (scheme, n_spans) point. The "ae" scheme trains a fresh
/// constellation per point with a derived seed; the "qam" scheme keeps the
/// best net rate over the configured QAM orders. Failures abort unless
/// keep_going, in which case they are reported and the point is skipped.
inline SweepResult run_sweep(const RunConfig& config, bool keep_going = false, unsigned threads = 0) {
  config.validate();
  if (threads == 0) threads = sweep_thread_count();

  struct Task {
    std::string scheme;
    int n_spans;
    std::optional<SweepRow> row;
    std::optional<Constellation> constellation;
    std::string error;
    bool numerical = false;
  };
  std::vector<Task> tasks;
  for (const std::string scheme : {"ae", "qam"}) {
    if (std::find(config.sweep.schemes.begin(), config.sweep.schemes.end(), scheme) == config.sweep.schemes.end())
      continue;
    for (int n : config.sweep.span_grid) tasks.push_back({scheme, n, std::nullopt, std::nullopt, {}, false});
  }

  auto run_task = [&](Task& task) {
    try {
      LinkConfig link = config.link;
      link.n_spans = task.n_spans;
      if (task.scheme == "ae") {
        auto trained = train(sweep_train_config(config, task.n_spans));
        task.row = evaluate_row(trained.constellation, link, config.sweep, config.eval, "ae");
        task.constellation = std::move(trained.constellation);
      } else {
        const int max_n_d = config.sweep.qam_dummy_bits ? -1 : 0;
        for (int m : config.qam_m_list()) {
          auto row = evaluate_row(uniform_qam(m), link, config.sweep, config.eval, "qam", max_n_d);
          if (!task.row || row.net_rate > task.row->net_rate) task.row = std::move(row);
        }
      }
    } catch (const NumericalError& e) {
      task.error = e.what();
      task.numerical = true;
    } catch (const Error& e) {
      task.error = e.what();
    }
  };

  if (threads <= 1) {
    for (auto& t : tasks) {
      run_task(t);
      if (!t.error.empty() && !keep_going) break;
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < std::min<std::size_t>(threads, tasks.size()); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) run_task(tasks[i]);
      });
    }
    for (auto& th : pool) th.join();
  }

  SweepResult result;
  for (auto& t : tasks) {
    if (!t.error.empty()) {
      const std::string msg = "grid point " + t.scheme + " n_spans=" + std::to_string(t.n_spans) + ": " + t.error;
      if (!keep_going) {
        if (t.numerical) throw NumericalError(msg);
        throw Error(msg);
      }
      result.failures.push_back({t.scheme, t.n_spans, t.error});
      continue;
    }
    if (!t.row) continue;
    result.rows.push_back(std::move(*t.row));
    if (t.constellation) result.ae_constellations.emplace_back(t.n_spans, std::move(*t.constellation));
  }
  std::stable_sort(result.rows.begin(), result.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.scheme != b.scheme ? a.scheme < b.scheme : a.n_spans < b.n_spans;
  });
  return result;
}

/// Largest distance at which the scheme is feasible with net rate >= target.
inline std::optional<double> max_reach(const std::vector<SweepRow>& rows, double target_net_rate,
                                       const std::string& scheme) {
  std::optional<double> best;
  for (const auto& r : rows) {
    if (r.scheme != scheme || !r.feasible || r.net_rate < target_net_rate) continue;
    if (!best || r.distance_km > *best) best = r.distance_km;
  }
  return best;
}

inline constexpr const char* kResultsHeader =
    "scheme,n_spans,distance_km,launch_power,snr_eff_db,n_d,data_gmi,net_rate,feasible";

namespace detail {

inline std::string fmt_g(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

}  // namespace detail

/// Results table, floats with 6 significant digits.
inline std::string results_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << kResultsHeader << '\n';
  for (const auto& r : rows) {
    out << r.scheme << ',' << r.n_spans << ',' << detail::fmt_g(r.distance_km, 6) << ','
        << detail::fmt_g(r.launch_power, 6) << ',' << detail::fmt_g(r.snr_eff_db, 6) << ',' << r.n_d << ','
        << detail::fmt_g(r.data_gmi, 6) << ',' << detail::fmt_g(r.net_rate, 6) << ','
        << (r.feasible ? "true" : "false") << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// LUT
//
//   # shapegain-lut m=<m>
//   # dual_pol_dummy_mask=<2m chars>
//   # table=XY            (or table=X ... table=Y when the masks differ)
//   label_bits,i,q,dummy_mask
//   <m-bit label>,<I>,<Q>,<m-bit mask of that polarization>

struct LutTable {
  Constellation constellation;
  std::string dual_pol_mask;
};

inline std::string label_string(std::uint32_t label, int m) {
  std::string s(m, '0');
  for (int k = 0; k < m; ++k) s[k] = label_bit(label, k, m) ? '1' : '0';
  return s;
}

inline std::string lut_text(const Constellation& c, const std::string& dual_pol_mask) {
  const int m = c.bits();
  if (dual_pol_mask.size() != static_cast<std::size_t>(2 * m)) {
    throw ParameterError("LUT mask must have 2m=" + std::to_string(2 * m) + " characters");
  }
  const std::string mx = dual_pol_mask.substr(0, m);
  const std::string my = dual_pol_mask.substr(m);
  std::ostringstream out;
  out << "# shapegain-lut m=" << m << '\n' << "# dual_pol_dummy_mask=" << dual_pol_mask << '\n';
  auto table = [&](const char* name, const std::string& mask) {
    out << "# table=" << name << '\n' << "label_bits,i,q,dummy_mask\n";
    for (std::uint32_t label = 0; label < c.size(); ++label) {
      const auto p = c.point(label);
      out << label_string(label, m) << ',' << detail::fmt_g(p.real(), 17) << ',' << detail::fmt_g(p.imag(), 17)
          << ',' << mask << '\n';
    }
  };
  if (mx == my) {
    table("XY", mx);
  } else {
    table("X", mx);
    table("Y", my);
  }
  return out.str();
}

inline void export_lut(const Constellation& c, const RateAdaptPlan& plan, const std::filesystem::path& path) {
  if (plan.m != c.bits()) {
    throw ParameterError("export_lut: plan is for m=" + std::to_string(plan.m) + " but constellation has m=" +
                         std::to_string(c.bits()));
  }
  write_text_file(path, lut_text(c, plan.dual_pol_mask()));
}

inline LutTable parse_lut(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int m = -1;
  std::string mask;
  std::vector<cplx> pts;
  bool in_first_table = false, first_done = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# shapegain-lut m=", 0) == 0) m = std::stoi(line.substr(18));
      if (line.rfind("# dual_pol_dummy_mask=", 0) == 0) mask = line.substr(22);
      if (line.rfind("# table=", 0) == 0) {
        if (in_first_table) first_done = true;
        in_first_table = !first_done;
      }
      continue;
    }
    if (line.rfind("label_bits,", 0) == 0 || first_done) continue;
    std::istringstream row(line);
    std::string label, i, q, rowmask;
    if (!std::getline(row, label, ',') || !std::getline(row, i, ',') || !std::getline(row, q, ',') ||
        !std::getline(row, rowmask, ',')) {
      throw IoError("LUT row '" + line + "' needs 4 fields");
    }
    if (m < 1 || label.size() != static_cast<std::size_t>(m)) throw IoError("LUT label width mismatch");
    std::uint32_t value = 0;
    for (char ch : label) value = (value << 1) | (ch == '1' ? 1U : 0U);
    if (value != pts.size()) throw IoError("LUT rows must be in label order");
    try {
      pts.emplace_back(std::stod(i), std::stod(q));
    } catch (const std::logic_error&) {
      throw IoError("LUT row '" + line + "' has a malformed coordinate");
    }
  }
  if (m < 1) throw IoError("LUT is missing its '# shapegain-lut m=' header");
  if (mask.size() != static_cast<std::size_t>(2 * m)) throw IoError("LUT dual-pol mask has wrong width");
  try {
    return {Constellation(m, std::move(pts)), mask};
  } catch (const ParameterError& e) {
    throw IoError(std::string("LUT: ") + e.what());
  }
}

inline LutTable load_lut(const std::filesystem::path& path) { return parse_lut(read_text_file(path)); }

}  // namespace shapegain
