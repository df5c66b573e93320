#pragma once

// fmhom command-line front end. run_cli() holds the whole program so that
// tests can drive it in-process; tools/fmhom.cpp only forwards main().
//
// Exit codes: 0 success, 1 usage, 2 configuration or input errors,
// 3 runtime errors, 4 fit divergence.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fmhom/afc_mapping.hpp"
#include "fmhom/analysis.hpp"
#include "fmhom/coincidence_mc.hpp"
#include "fmhom/csv.hpp"
#include "fmhom/errors.hpp"
#include "fmhom/hom_analytic.hpp"
#include "fmhom/model.hpp"
#include "fmhom/repeater_rates.hpp"
#include "fmhom/serialization.hpp"

namespace fmhom {

/// Everything a subcommand may need. Defaults reproduce the nominal
/// three-mode experiment.
struct RunConfig {
  HomSetup setup;
  std::pair<AfcBank, AfcBank> banks{AfcBank::default_bank(), AfcBank::default_bank()};
  PulseSpec pulse;
  RateParams rate_params;
  LinkParams link_params;
  std::uint64_t seed = 1;
  std::uint64_t trials = 1'000'000;
  /// Per-mode mean photon numbers, used where modes are treated separately.
  std::vector<double> mode_mean_photons{0.064, 0.053, 0.031};
  /// Dip width (rad/ns); derived from the pulse when absent.
  std::optional<double> sigma;

  double dip_sigma() const { return sigma ? *sigma : pulse.dip_sigma(); }

  std::vector<HomSetup> mode_setups() const {
    std::vector<HomSetup> out;
    for (double mu : mode_mean_photons) out.push_back(setup.with_mean_photons(mu, mu));
    return out;
  }
};

template <>
struct Codec<RunConfig> {
  static Json write(const RunConfig& v) {
    Json j = {{"setup", Codec<HomSetup>::write(v.setup)},
              {"banks", Json::array({Codec<AfcBank>::write(v.banks.first),
                                     Codec<AfcBank>::write(v.banks.second)})},
              {"pulse", Codec<PulseSpec>::write(v.pulse)},
              {"rate_params", Codec<RateParams>::write(v.rate_params)},
              {"link_params", Codec<LinkParams>::write(v.link_params)},
              {"seed", v.seed},
              {"trials", v.trials},
              {"mode_mean_photons", v.mode_mean_photons}};
    if (v.sigma) j["sigma"] = *v.sigma;
    return j;
  }

  static RunConfig read(JsonReader& r, const RunConfig& d) {
    RunConfig c = d;
    c.setup = r.object("setup", d.setup);
    c.pulse = r.object("pulse", d.pulse);
    c.rate_params = r.object("rate_params", d.rate_params);
    c.link_params = r.object("link_params", d.link_params);
    c.seed = r.unsigned_integer("seed", d.seed);
    c.trials = r.unsigned_integer("trials", d.trials);
    if (r.has("banks")) {
      const auto banks = r.array<AfcBank>("banks", {});
      if (banks.size() != 2) {
        r.violations().push_back({detail::join_path(r.path(), "banks"), "expected exactly two banks"});
      } else {
        c.banks = {banks[0], banks[1]};
      }
    }
    if (r.has("sigma")) {
      const double s = r.number("sigma", 0.0);
      detail::require(detail::is_positive(s), r.path(), "sigma", "must be > 0", r.violations());
      c.sigma = s;
    }
    c.mode_mean_photons = r.numbers("mode_mean_photons", d.mode_mean_photons);
    for (std::size_t i = 0; i < c.mode_mean_photons.size(); ++i) {
      if (!detail::is_nonneg(c.mode_mean_photons[i])) {
        r.violations().push_back(
            {detail::join_path(r.path(), "mode_mean_photons[" + std::to_string(i) + "]"), "must be >= 0"});
      }
    }
    if (c.trials < 1) r.violations().push_back({detail::join_path(r.path(), "trials"), "must be >= 1"});
    return c;
  }
};

namespace detail {

/// Carries the exit code of a failed subcommand.
struct CliFailure {
  int code;
  std::string message;
};

inline RunConfig load_run_config(const std::string& path, std::istream& in) {
  if (path.empty()) return {};
  Json doc;
  try {
    if (path == "-") {
      doc = Json::parse(in);
    } else {
      std::ifstream file(path);
      if (!file) throw CliFailure{2, "cannot open config '" + path + "'"};
      doc = Json::parse(file);
    }
  } catch (const Json::parse_error& e) {
    throw CliFailure{2, std::string("config is not valid JSON: ") + e.what()};
  }
  return validate<RunConfig>(doc);
}

inline std::pair<double, double> parse_range(const std::string& text) {
  const auto colon = text.find(':', 1);  // skip a leading minus sign
  double lo = 0.0;
  double hi = 0.0;
  if (colon == std::string::npos || !parse_double(text.substr(0, colon), lo) ||
      !parse_double(text.substr(colon + 1), hi)) {
    throw CliFailure{2, "bad --tau-range '" + text + "' (expected MIN:MAX)"};
  }
  return {lo, hi};
}

inline std::pair<int, int> parse_sweep(std::string text) {
  if (text.rfind("N=", 0) == 0) text = text.substr(2);
  const auto dots = text.find("..");
  long long lo = 0;
  long long hi = 0;
  if (dots == std::string::npos || !parse_int64(text.substr(0, dots), lo) ||
      !parse_int64(text.substr(dots + 2), hi) || lo < 1 || hi < lo || hi > 1'000'000) {
    throw CliFailure{2, "bad --sweep '" + text + "' (expected N=LO..HI with 1 <= LO <= HI)"};
  }
  return {static_cast<int>(lo), static_cast<int>(hi)};
}

inline std::string dump_json(const Json& j) {
  return j.dump(2, ' ', false, Json::error_handler_t::strict) + "\n";
}

}  // namespace detail

struct CliStreams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

inline int run_cli(const std::vector<std::string>& args, CliStreams io) {
  CLI::App app{"Frequency-multiplexed HOM interference toolkit", "fmhom"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::string out_path;
  app.add_option("--config", config_path, "Run configuration JSON ('-' for standard input)");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--trials", trials, "Monte Carlo trials (per point for dip scans)");
  app.add_option("--out", out_path, "Write data here instead of standard output");

  auto* dip = app.add_subcommand("dip", "HOM dip curve as CSV");
  bool dip_mc = false;
  bool dip_analytic = false;
  std::string tau_range = "-500:500";
  double step = 20.0;
  auto* analytic_flag = dip->add_flag("--analytic", dip_analytic, "Closed-form curve (default)");
  dip->add_flag("--mc", dip_mc, "Monte Carlo scan with error bars")->excludes(analytic_flag);
  dip->add_option("--tau-range", tau_range, "Delay range MIN:MAX in ns");
  dip->add_option("--step", step, "Delay step in ns");

  auto* vis = app.add_subcommand("visibility", "Visibility limit, closed form vs oracle (JSON)");

  auto* rates = app.add_subcommand("rates", "Success probabilities and rate limits across N (CSV)");
  std::string sweep;
  bool long_format = false;
  bool optimum = false;
  rates->add_option("--sweep", sweep, "Mode counts, e.g. N=1..30");
  rates->add_flag("--long", long_format, "Long format: quantity,N,p,matched,exact,probability");
  rates->add_flag("--optimum", optimum, "Use the scaled-up rate parameters");

  auto* schedule = app.add_subcommand("schedule", "Echo schedules and cross-mode overlaps (CSV)");
  double sched_tau = 0.0;
  schedule->add_option("--tau", sched_tau, "Relative delay in ns");

  auto* fit = app.add_subcommand("fit", "Fit a dip curve (JSON report)");
  std::string fit_input;
  fit->add_option("input", fit_input, "Dip-curve CSV ('-' for standard input)")->required();

  auto* linksim = app.add_subcommand("linksim", "Monte Carlo of the two-link success probability (JSON)");
  bool matched = false;
  bool one_photon = false;
  std::optional<double> link_p;
  std::optional<int> link_n;
  linksim->add_flag("--matched", matched, "Frequency-mode matching at the repeater");
  linksim->add_flag("--one-photon", one_photon, "One-photon instead of two-photon interference");
  linksim->add_option("--p", link_p, "Override arrival probability p");
  linksim->add_option("--modes", link_n, "Override number of modes N");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    io.out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    io.err << "fmhom: " << e.what() << "\n";
    return 1;
  }

  std::ostringstream data;
  try {
    RunConfig cfg = detail::load_run_config(config_path, io.in);
    if (seed) cfg.seed = *seed;
    if (trials) {
      if (*trials < 1) throw detail::CliFailure{2, "--trials must be >= 1"};
      cfg.trials = *trials;
    }

    if (dip->parsed()) {
      const auto [lo, hi] = detail::parse_range(tau_range);
      if (!(lo < hi) || !(step > 0.0)) throw detail::CliFailure{2, "need MIN < MAX and --step > 0"};
      const double sigma = cfg.dip_sigma();
      if (dip_mc) {
        write_dip_curve_csv(data, dip_scan(cfg.setup, sigma, lo, hi, step, cfg.trials, cfg.seed));
      } else {
        const double v = visibility_limit(cfg.setup);
        std::vector<DipPoint> pts;
        for (double tau : delay_grid(lo, hi, step)) {
          // Ideal dip depth 1/2 rescaled to the setup's visibility limit.
          pts.push_back({tau, 1.0 - 2.0 * v * (1.0 - dip_probability(sigma, tau)), 0.0});
        }
        write_dip_curve_csv(data, DipCurve(std::move(pts)));
      }
    } else if (vis->parsed()) {
      const auto singles = singles_probs(cfg.setup);
      const double coin = coincidence_prob_averaged(cfg.setup);
      const auto oracle = phase_integral_oracle(cfg.setup, 100000);
      const double residual =
          coin > 0.0 ? std::abs(coin - oracle.coincidence) / coin : std::abs(coin - oracle.coincidence);
      const bool defined = singles.p_c > 0.0 && singles.p_d > 0.0;
      Json report = {
          {"visibility_limit", defined ? Json(visibility_limit(cfg.setup)) : Json(nullptr)},
          {"visibility_as_printed",
           defined ? Json(visibility_limit(cfg.setup, CoincidenceForm::as_printed)) : Json(nullptr)},
          {"coincidence", coin},
          {"oracle_coincidence", oracle.coincidence},
          {"singles", {{"p_c", singles.p_c}, {"p_d", singles.p_d}}},
          {"oracle_residual", residual},
          {"setup", to_json_value(cfg.setup)}};
      Json modes = Json::array();
      for (const auto& s : cfg.mode_setups()) {
        const auto sp = singles_probs(s);
        modes.push_back({{"mu", s.mu_a()},
                         {"visibility_limit",
                          sp.p_c > 0.0 && sp.p_d > 0.0 ? Json(visibility_limit(s)) : Json(nullptr)}});
      }
      report["modes"] = modes;
      data << detail::dump_json(report);
    } else if (rates->parsed()) {
      const RateParams rp = optimum ? RateParams::optimum() : cfg.rate_params;
      const auto [n_lo, n_hi] =
          sweep.empty() ? std::pair<int, int>{1, rp.n_modes()} : detail::parse_sweep(sweep);
      if (long_format) {
        write_rate_table_csv(data, cfg.link_params, rp, n_lo, n_hi);
      } else {
        data << "N,p,p2_unmatched_exact,p2_unmatched_approx,p2_matched_exact,p2_matched_approx,"
                "p1_unmatched_exact,p1_unmatched_approx,p1_matched_exact,p1_matched_approx,"
                "r_limit_two_photon,r_limit_one_photon\n";
        for (int n = n_lo; n <= n_hi; ++n) {
          const LinkParams lp = cfg.link_params.with_modes(n);
          std::vector<std::string> row{std::to_string(n), format_double(lp.p_arrival())};
          for (Scheme s : {Scheme::two_photon, Scheme::one_photon}) {
            for (bool m : {false, true}) {
              for (bool exact : {true, false}) row.push_back(format_double(p_success(lp, s, m, exact)));
            }
          }
          row.push_back(format_double(r_limit(rp.with_modes(n), true)));
          row.push_back(format_double(r_limit(rp.with_modes(n), false)));
          write_row(data, row);
        }
      }
    } else if (schedule->parsed()) {
      const double fwhm = cfg.pulse.fwhm_duration();
      data << "# bank 1\n";
      write_schedule_csv(data, echo_schedule(cfg.banks.first, 0.0, 0.0, fwhm));
      data << "# bank 2 (advanced by tau=" << format_double(sched_tau) << " ns)\n";
      write_schedule_csv(data, echo_schedule(cfg.banks.second, 0.0, -sched_tau, fwhm));
      data << "# overlap\nbank1_mode,bank2_mode,overlap\n";
      const Matrix m = cross_mode_overlap(cfg.banks.first, cfg.banks.second, sched_tau, fwhm);
      for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m[i].size(); ++j) {
          write_row(data, {std::to_string(i + 1), std::to_string(j + 1), format_double(m[i][j])});
        }
      }
      int bank_no = 1;
      for (const AfcBank* bank : {&cfg.banks.first, &cfg.banks.second}) {
        const auto rep = mode_separability_check(*bank, fwhm, 0.01);
        data << "# bank " << bank_no++ << " separability (threshold 0.01): "
             << (rep.pass ? "pass" : "fail") << ", worst pair (" << rep.worst_mode_a << ","
             << rep.worst_mode_b << ") overlap " << format_double(rep.worst_overlap) << "\n";
      }
    } else if (fit->parsed()) {
      std::ifstream file;
      std::istream* src = &io.in;
      if (fit_input != "-") {
        file.open(fit_input);
        if (!file) throw detail::CliFailure{2, "cannot open '" + fit_input + "'"};
        src = &file;
      }
      std::stringstream buffer;
      buffer << src->rdbuf();
      if (trim(buffer.str()).rfind("bin_width_ns=", 0) == 0) {
        throw detail::CliFailure{2, "input is a single-delay histogram; fit needs a dip curve"};
      }
      const DipCurve curve = load_dip_curve(buffer);
      const DipFitResult result = fit_dip(curve);
      data << detail::dump_json(fit_report_json(result, curve.size()));
    } else if (linksim->parsed()) {
      LinkParams lp = cfg.link_params;
      if (link_p || link_n) {
        lp = LinkParams(link_p.value_or(lp.p_arrival()), link_n.value_or(lp.n_modes()),
                        lp.eta_two_photon(), lp.eta_one_photon());
      }
      const bool two_photon = !one_photon;
      const auto mc = simulate_link_mc(lp, matched, two_photon, cfg.trials, cfg.seed);
      const Scheme scheme = two_photon ? Scheme::two_photon : Scheme::one_photon;
      data << detail::dump_json({{"p_hat", mc.p_hat()},
                                 {"std_error", mc.std_error()},
                                 {"exact", p_success(lp, scheme, matched, true)},
                                 {"approx", p_success(lp, scheme, matched, false)},
                                 {"trials", mc.trials()},
                                 {"successes", mc.successes()},
                                 {"scheme", to_string(scheme)},
                                 {"matched", matched},
                                 {"link_params", to_json_value(lp)}});
    }
  } catch (const detail::CliFailure& f) {
    io.err << "fmhom: " << f.message << "\n";
    return f.code;
  } catch (const ValidationError& e) {
    io.err << "fmhom: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    io.err << "fmhom: parse error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    io.err << "fmhom: " << e.what() << "\n";
    return 2;
  } catch (const FitError& e) {
    io.err << "fmhom: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    io.err << "fmhom: " << e.what() << "\n";
    return 3;
  }

  if (out_path.empty()) {
    io.out << data.str();
  } else {
    std::ofstream file(out_path, std::ios::binary);
    file << data.str();
    if (!file) {
      io.err << "fmhom: cannot write '" << out_path << "'\n";
      return 3;
    }
  }
  return 0;
}

inline int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, {std::cin, std::cout, std::cerr});
}

}  // namespace fmhom
