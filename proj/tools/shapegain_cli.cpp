// Command-line front end.
//
// Exit codes: 0 success, 1 usage / parameter error, 2 numerical failure,
// 3 I/O error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "shapegain/shapegain.hpp"

namespace sg = shapegain;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

std::string history_csv(const sg::TrainHistory& history) {
  std::ostringstream out;
  out << "iteration,loss,surrogate_gmi,grad_norm\n";
  char buf[128];
  for (std::size_t i = 0; i < history.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g\n", i, history[i].loss, history[i].surrogate_gmi,
                  history[i].grad_norm);
    out << buf;
  }
  return out.str();
}

void print_report(const sg::GmiReport& r, std::ostream& out) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "GMI total: %.6f +- %.6f bits/symbol (dual-pol %.6f), %zu samples\n", r.total,
                r.stderr_total, r.total_dualpol, r.n_samples);
  out << buf << "per-bit:";
  for (double v : r.per_bit) {
    std::snprintf(buf, sizeof buf, " %.4f", v);
    out << buf;
  }
  out << '\n';
}

void print_clusters(const sg::Constellation& c, double epsilon, std::ostream& out) {
  const auto clusters = sg::detect_mom_clusters(c, epsilon);
  out << "many-to-one clusters (eps=" << epsilon << "): " << clusters.size() << '\n';
  for (const auto& cl : clusters) {
    out << "  labels {";
    for (std::size_t i = 0; i < cl.member_labels.size(); ++i) {
      out << (i ? "," : "") << sg::label_string(cl.member_labels[i], c.bits());
    }
    out << "} ambiguous bits {";
    for (std::size_t i = 0; i < cl.ambiguous_bit_positions.size(); ++i) {
      out << (i ? "," : "") << cl.ambiguous_bit_positions[i];
    }
    out << "}\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shapegain: learned geometric constellation shaping with dummy-bit rate adaptation"};
  app.require_subcommand(1);

  // qam
  auto* qam = app.add_subcommand("qam", "Write a uniform Gray-labeled QAM constellation");
  int qam_m = 4;
  std::string qam_out;
  qam->add_option("--m", qam_m, "Bits per symbol (1..10)")->required();
  qam->add_option("--out", qam_out, "Output constellation JSON")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train a constellation from a run configuration");
  std::string train_config, train_out, train_history;
  tr->add_option("--config", train_config, "Run configuration JSON")->required();
  tr->add_option("--out", train_out, "Output constellation JSON")->required();
  tr->add_option("--history", train_history, "Training history CSV");

  // eval
  auto* ev = app.add_subcommand("eval", "Monte-Carlo per-bit GMI of a constellation");
  std::string eval_constellation, eval_link;
  std::optional<double> eval_snr_db;
  std::optional<int> eval_spans;
  std::size_t eval_samples = 200000;
  std::uint64_t eval_seed = 7;
  double eval_epsilon = 0.01;
  bool eval_json = false;
  ev->add_option("--constellation", eval_constellation, "Constellation JSON")->required();
  auto* snr_opt = ev->add_option("--snr-db", eval_snr_db, "AWGN SNR in dB (1/noise variance)");
  auto* link_opt = ev->add_option("--link-from", eval_link, "Run configuration whose link/sweep sections set the SNR");
  snr_opt->excludes(link_opt);
  ev->add_option("--spans", eval_spans, "Override the link's span count (with --link-from)")->needs(link_opt);
  ev->add_option("--samples", eval_samples, "Monte-Carlo samples")->capture_default_str();
  ev->add_option("--seed", eval_seed, "Noise seed")->capture_default_str();
  ev->add_option("--epsilon", eval_epsilon, "Many-to-one cluster threshold")->capture_default_str();
  ev->add_flag("--json", eval_json, "Print the GMI report as JSON");

  // adapt
  auto* ad = app.add_subcommand("adapt", "Build a dummy-bit plan from a GMI report");
  std::string adapt_constellation, adapt_report, adapt_out, adapt_fec = "3/4";
  std::optional<int> adapt_nd;
  bool adapt_best = false;
  ad->add_option("--constellation", adapt_constellation, "Constellation JSON")->required();
  ad->add_option("--report", adapt_report, "GMI report JSON (from eval --json)")->required();
  auto* nd_opt = ad->add_option("--nd", adapt_nd, "Number of dummy bits per dual-pol symbol");
  auto* best_opt = ad->add_flag("--best", adapt_best, "Pick the feasible plan with the highest net rate");
  nd_opt->excludes(best_opt);
  ad->add_option("--fec-rate", adapt_fec, "FEC rate K/N")->capture_default_str();
  ad->add_option("--out", adapt_out, "Write the plan JSON here instead of standard output");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Net rate versus distance for learned and QAM constellations");
  std::string sweep_config, sweep_out;
  bool keep_going = false;
  sw->add_option("--config", sweep_config, "Run configuration JSON")->required();
  sw->add_option("--out", sweep_out, "Results CSV")->required();
  sw->add_flag("--keep-going", keep_going, "Skip failing grid points instead of aborting");

  // export-lut
  auto* lut = app.add_subcommand("export-lut", "Export the transmitter look-up table with dummy-bit masks");
  std::string lut_constellation, lut_plan, lut_out;
  lut->add_option("--constellation", lut_constellation, "Constellation JSON")->required();
  lut->add_option("--plan", lut_plan, "Plan JSON (from adapt)")->required();
  lut->add_option("--out", lut_out, "LUT CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*qam) {
      sg::save_constellation(sg::uniform_qam(qam_m), qam_out);
      std::cout << "wrote " << qam_out << '\n';
    } else if (*tr) {
      const auto config = sg::load_run_config(train_config);
      const auto result = sg::train(config.train);
      sg::save_constellation(result.constellation, train_out);
      if (!train_history.empty()) sg::write_text_file(train_history, history_csv(result.history));
      std::printf("trained m=%d at %.3f dB, final surrogate GMI %.4f bits/symbol\n", config.train.m,
                  sg::linear_to_db(1.0 / result.noise_variance),
                  result.history.empty() ? 0.0 : result.history.back().surrogate_gmi);
      std::cout << "wrote " << train_out << '\n';
    } else if (*ev) {
      if (!eval_snr_db && eval_link.empty()) {
        std::cerr << "error: eval needs --snr-db or --link-from\n\n" << ev->help();
        return kExitUsage;
      }
      const auto c = sg::load_constellation(eval_constellation);
      double noise_variance = 0.0;
      std::ostringstream info;
      if (eval_snr_db) {
        noise_variance = 1.0 / sg::db_to_linear(*eval_snr_db);
      } else {
        auto config = sg::load_run_config(eval_link);
        if (eval_spans) {
          config.link.n_spans = *eval_spans;
          config.link.validate();
        }
        const auto mom = sg::moments(c);
        const double power = sg::resolve_launch_power(config.link, config.sweep, mom);
        const auto ch = sg::effective_snr(config.link, power, mom);
        noise_variance = ch.noise_variance;
        char buf[160];
        std::snprintf(buf, sizeof buf, "link: %d spans (%.0f km), launch power %.3f dB, ", config.link.n_spans,
                      config.link.distance_km(), sg::linear_to_db(power));
        info << buf;
      }
      std::mt19937_64 rng(eval_seed);
      const auto report = sg::per_bit_gmi_mc(c, noise_variance, eval_samples, rng);
      if (eval_json) {
        std::cout << sg::to_json_value(report).dump(2) << '\n';
      } else {
        std::printf("%seffective SNR %.3f dB\n", info.str().c_str(), sg::linear_to_db(1.0 / noise_variance));
        print_report(report, std::cout);
        print_clusters(c, eval_epsilon, std::cout);
      }
    } else if (*ad) {
      if (!adapt_nd && !adapt_best) {
        std::cerr << "error: adapt needs --nd K or --best\n\n" << ad->help();
        return kExitUsage;
      }
      const auto c = sg::load_constellation(adapt_constellation);
      const auto report = sg::load_gmi_report(adapt_report);
      if (report.bits() != c.bits()) {
        throw sg::ParameterError("report has m=" + std::to_string(report.bits()) + " but constellation has m=" +
                                 std::to_string(c.bits()));
      }
      const auto rate = sg::Rational::parse(adapt_fec);
      const auto plan = adapt_best ? sg::best_plan(report, rate) : sg::select_dummy_bits(report, *adapt_nd, rate);
      const std::string text = sg::to_json_value(plan).dump(2) + "\n";
      if (adapt_out.empty()) {
        std::cout << text;
      } else {
        sg::write_text_file(adapt_out, text);
        std::printf("n_d=%d net rate %.4f bits/dual-pol symbol, data GMI %.4f, wrote %s\n", plan.n_d, plan.net_rate,
                    plan.data_gmi, adapt_out.c_str());
      }
    } else if (*sw) {
      const auto config = sg::load_run_config(sweep_config);
      const auto result = sg::run_sweep(config, keep_going);
      for (const auto& f : result.failures) {
        std::cerr << "grid point " << f.scheme << " n_spans=" << f.n_spans << " failed: " << f.message << '\n';
      }
      sg::write_text_file(sweep_out, sg::results_csv(result.rows));
      if (!config.output.constellation_dir.empty()) {
        std::filesystem::create_directories(config.output.constellation_dir);
        for (const auto& [n, c] : result.ae_constellations) {
          sg::save_constellation(
              c, std::filesystem::path(config.output.constellation_dir) / ("ae_spans_" + std::to_string(n) + ".json"));
        }
      }
      for (const auto& r : result.rows) {
        std::printf("%-4s %3d spans %7.0f km  SNR %6.2f dB  n_d=%d  net %.3f  data GMI %.3f%s\n", r.scheme.c_str(),
                    r.n_spans, r.distance_km, r.snr_eff_db, r.n_d, r.net_rate, r.data_gmi,
                    r.feasible ? "" : "  (infeasible)");
      }
      std::cout << "wrote " << sweep_out << '\n';
      if (!result.failures.empty()) return kExitNumerical;
    } else if (*lut) {
      const auto c = sg::load_constellation(lut_constellation);
      const auto plan = sg::load_plan(lut_plan);
      sg::export_lut(c, plan, lut_out);
      std::cout << "wrote " << lut_out << '\n';
    }
  } catch (const sg::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const sg::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const sg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
