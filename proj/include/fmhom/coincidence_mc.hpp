#pragma once

// Monte Carlo estimators of HOM coincidence statistics. Two samplers with
// different computation paths are provided: one draws clicks straight from
// the phase-conditioned click probabilities, the other draws photon numbers
// and detects photons one at a time. Both are exact for coherent inputs and
// threshold detectors, so they must agree in distribution.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "fmhom/afc_mapping.hpp"
#include "fmhom/errors.hpp"
#include "fmhom/hom_analytic.hpp"
#include "fmhom/model.hpp"
#include "fmhom/parallel.hpp"
#include "fmhom/random.hpp"
#include "fmhom/serialization.hpp"

namespace fmhom {

inline double binomial_std_error(double p_hat, std::uint64_t trials) {
  return std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(trials));
}

class McResult {
 public:
  McResult() = default;
  McResult(std::uint64_t trials, std::uint64_t coincidences, std::uint64_t clicks_c,
           std::uint64_t clicks_d)
      : trials_(trials), coincidences_(coincidences), clicks_c_(clicks_c), clicks_d_(clicks_d) {
    Violations v;
    check(trials, coincidences, clicks_c, clicks_d, "", v);
    detail::throw_if(v);
    p_coin_hat_ = static_cast<double>(coincidences) / static_cast<double>(trials);
    std_error_ = binomial_std_error(p_coin_hat_, trials);
  }

  static void check(std::uint64_t trials, std::uint64_t coin, std::uint64_t c, std::uint64_t d,
                    const std::string& at, Violations& out) {
    detail::require(trials >= 1, at, "trials", "must be >= 1", out);
    detail::require(coin <= std::min(c, d), at, "coincidences", "must be <= min(clicks_c, clicks_d)",
                    out);
    detail::require(std::min(c, d) <= trials, at, "clicks_c", "min(clicks_c, clicks_d) must be <= trials",
                    out);
  }

  std::uint64_t trials() const { return trials_; }
  std::uint64_t coincidences() const { return coincidences_; }
  std::uint64_t clicks_c() const { return clicks_c_; }
  std::uint64_t clicks_d() const { return clicks_d_; }
  double p_coin_hat() const { return p_coin_hat_; }
  double std_error() const { return std_error_; }

  friend bool operator==(const McResult&, const McResult&) = default;

 private:
  std::uint64_t trials_ = 1;
  std::uint64_t coincidences_ = 0;
  std::uint64_t clicks_c_ = 0;
  std::uint64_t clicks_d_ = 0;
  double p_coin_hat_ = 0.0;
  double std_error_ = 0.0;
};

template <>
struct Codec<McResult> {
  static Json write(const McResult& v) {
    return {{"trials", v.trials()},           {"coincidences", v.coincidences()},
            {"clicks_c", v.clicks_c()},       {"clicks_d", v.clicks_d()},
            {"p_coin_hat", v.p_coin_hat()},   {"std_error", v.std_error()}};
  }
  // p_coin_hat and std_error are derived from the counts.
  static McResult read(JsonReader& r, const McResult& d) {
    const auto n = r.unsigned_integer("trials", d.trials());
    const auto k = r.unsigned_integer("coincidences", d.coincidences());
    const auto c = r.unsigned_integer("clicks_c", d.clicks_c());
    const auto dd = r.unsigned_integer("clicks_d", d.clicks_d());
    return detail::finish(
        r, d, [&](const std::string& at, Violations& out) { McResult::check(n, k, c, dd, at, out); },
        [&] { return McResult(n, k, c, dd); });
  }
};

namespace detail {

struct ClickCounts {
  std::uint64_t coincidences = 0;
  std::uint64_t clicks_c = 0;
  std::uint64_t clicks_d = 0;
  ClickCounts& operator+=(const ClickCounts& o) {
    coincidences += o.coincidences;
    clicks_c += o.clicks_c;
    clicks_d += o.clicks_d;
    return *this;
  }
  void add(bool c, bool d) {
    clicks_c += c;
    clicks_d += d;
    coincidences += c && d;
  }
};

inline void require_trials(std::uint64_t trials, const char* who) {
  if (trials < 1) throw DomainError(std::string(who) + ": trials must be >= 1");
}

// Stream tags keep the two samplers' random draws unrelated.
inline constexpr std::uint32_t kIntensityStream = 1;
inline constexpr std::uint32_t kFockStream = 2;
inline constexpr std::uint32_t kTimingStream = 3;

}  // namespace detail

/// Samples relative phase, then independent click/no-click at each detector
/// from the phase-conditioned click probabilities.
inline McResult simulate_coincidences(const HomSetup& setup, std::uint64_t trials,
                                      std::uint64_t seed, unsigned threads = 0) {
  detail::require_trials(trials, "simulate_coincidences");
  const auto ports = detail::port_terms(setup);
  const double eta_c = setup.det_c().efficiency();
  const double eta_d = setup.det_d().efficiency();
  const double log_keep_c = std::log1p(-setup.det_c().dark_count_prob());
  const double log_keep_d = std::log1p(-setup.det_d().dark_count_prob());

  const auto counts = parallel_accumulate<detail::ClickCounts>(
      trials,
      [&](std::uint64_t begin, std::uint64_t end) {
        detail::ClickCounts local;
        for (std::uint64_t i = begin; i < end; ++i) {
          TrialRng rng(seed, i, detail::kIntensityStream);
          const double cos_theta = std::cos(2.0 * std::numbers::pi * rng.uniform());
          const double swing = ports.interference * cos_theta;
          const double p_c = -std::expm1(log_keep_c - eta_c * (ports.mean_c + swing));
          const double p_d = -std::expm1(log_keep_d - eta_d * (ports.mean_d - swing));
          const bool c = rng.bernoulli(p_c);
          const bool d = rng.bernoulli(p_d);
          local.add(c, d);
        }
        return local;
      },
      threads);
  return {trials, counts.coincidences, counts.clicks_c, counts.clicks_d};
}

/// Photon-number sampler. Input b's field is split into a component
/// parallel to input a (amplitude fraction kappa = xi cos(phi)), which
/// interferes with a at the splitter, and an orthogonal remainder, whose
/// photons are routed one by one (to port c with probability r^2). Each
/// photon is then detected with the detector efficiency; dark counts are
/// added independently.
inline McResult simulate_coincidences_fock(const HomSetup& setup, std::uint64_t trials,
                                           std::uint64_t seed, unsigned threads = 0) {
  detail::require_trials(trials, "simulate_coincidences_fock");
  const double t = setup.splitter().t_amp();
  const double r = setup.splitter().r_amp();
  const double kappa = setup.temporal_overlap() * std::cos(deg_to_rad(setup.pol_mismatch()));
  const double mu_a = setup.mu_a();
  const double mu_par = setup.mu_b() * kappa * kappa;           // interfering part of b
  const double mu_orth = setup.mu_b() * (1.0 - kappa * kappa);  // distinguishable part of b
  const double amp_a = std::sqrt(mu_a);
  const double amp_b = std::sqrt(mu_par);
  const double eta_c = setup.det_c().efficiency();
  const double eta_d = setup.det_d().efficiency();
  const double dark_c = setup.det_c().dark_count_prob();
  const double dark_d = setup.det_d().dark_count_prob();

  auto detect = [](TrialRng& rng, std::uint64_t photons, double eta) {
    for (std::uint64_t k = 0; k < photons; ++k) {
      if (rng.bernoulli(eta)) return true;
    }
    return false;
  };

  const auto counts = parallel_accumulate<detail::ClickCounts>(
      trials,
      [&](std::uint64_t begin, std::uint64_t end) {
        detail::ClickCounts local;
        for (std::uint64_t i = begin; i < end; ++i) {
          TrialRng rng(seed, i, detail::kFockStream);
          const double theta = 2.0 * std::numbers::pi * rng.uniform();
          // Coherent amplitudes after the splitter: c = t a + r b e^{i theta},
          // d = r a - t b e^{i theta}.
          const double c_re = t * amp_a + r * amp_b * std::cos(theta);
          const double c_im = r * amp_b * std::sin(theta);
          const double d_re = r * amp_a - t * amp_b * std::cos(theta);
          const double d_im = -t * amp_b * std::sin(theta);
          std::uint64_t n_c = sample_poisson(rng, c_re * c_re + c_im * c_im);
          std::uint64_t n_d = sample_poisson(rng, d_re * d_re + d_im * d_im);
          const std::uint64_t n_orth = sample_poisson(rng, mu_orth);
          for (std::uint64_t k = 0; k < n_orth; ++k) {
            if (rng.bernoulli(r * r)) {
              ++n_c;
            } else {
              ++n_d;
            }
          }
          const bool photon_c = detect(rng, n_c, eta_c);
          const bool dark_click_c = rng.bernoulli(dark_c);
          const bool photon_d = detect(rng, n_d, eta_d);
          const bool dark_click_d = rng.bernoulli(dark_d);
          local.add(photon_c || dark_click_c, photon_d || dark_click_d);
        }
        return local;
      },
      threads);
  return {trials, counts.coincidences, counts.clicks_c, counts.clicks_d};
}

/// Number of grid points tau_min, tau_min + step, ... not exceeding tau_max.
inline std::size_t delay_grid_size(double tau_min, double tau_max, double step) {
  if (!(tau_min < tau_max)) throw DomainError("delay grid: tau_min must be < tau_max");
  if (!(step > 0.0)) throw DomainError("delay grid: step must be > 0");
  return static_cast<std::size_t>(std::floor((tau_max - tau_min) / step + 1e-9)) + 1;
}

inline std::vector<double> delay_grid(double tau_min, double tau_max, double step) {
  const std::size_t n = delay_grid_size(tau_min, tau_max, step);
  std::vector<double> taus(n);
  for (std::size_t k = 0; k < n; ++k) taus[k] = tau_min + static_cast<double>(k) * step;
  return taus;
}

/// MC scan of the dip: at each delay the setup's temporal overlap becomes
/// exp(-sigma^2 tau^2 / 4); values are normalized by the analytic
/// coincidence probability of fully distinguishable inputs.
inline DipCurve dip_scan(const HomSetup& setup, double sigma, double tau_min, double tau_max,
                         double step, std::uint64_t trials_per_point, std::uint64_t seed,
                         unsigned threads = 0) {
  detail::require_trials(trials_per_point, "dip_scan");
  const auto taus = delay_grid(tau_min, tau_max, step);
  const double baseline = coincidence_prob_averaged(setup.with_temporal_overlap(0.0));
  if (!(baseline > 0.0)) throw DomainError("dip_scan: distinguishable coincidence probability is 0");

  std::vector<DipPoint> points;
  points.reserve(taus.size());
  for (std::size_t k = 0; k < taus.size(); ++k) {
    const HomSetup at_tau = setup.with_temporal_overlap(temporal_overlap(sigma, taus[k]));
    const McResult mc = simulate_coincidences(at_tau, trials_per_point, derive_seed(seed, k), threads);
    points.push_back({taus[k], mc.p_coin_hat() / baseline, mc.std_error() / baseline});
  }
  return DipCurve(std::move(points));
}

struct HistogramOptions {
  double bin_width = kHistogramBinNs;
  /// Counts of the optional transmitted-light peak; 0 disables it.
  std::uint64_t artifact_counts = 0;
  double artifact_position = 2500.0;
  double artifact_fwhm = kDefaultPulseFwhmNs;
  unsigned threads = 0;
};

struct SynthesizedHistogram {
  CoincidenceHistogram histogram;
  std::vector<McResult> per_mode;  // bank order
  std::vector<PairPeak> peaks;
};

/// Builds a detection-time histogram of coincidences for two banks at delay
/// tau. Each matched mode pair is simulated with its own temporal overlap;
/// every simulated coincidence is placed at the pair's mean echo time with
/// Gaussian timing spread sigma_t / sqrt(2) (the product of the two echo
/// envelopes) and binned.
inline SynthesizedHistogram synthesize_histogram(const std::pair<AfcBank, AfcBank>& banks,
                                                 const PulseSpec& pulse,
                                                 const std::vector<HomSetup>& setup_per_mode,
                                                 double tau, std::uint64_t trials,
                                                 std::uint64_t seed,
                                                 const HistogramOptions& options = {}) {
  const auto& [bank1, bank2] = banks;
  if (bank1.size() != bank2.size()) throw ConfigError("synthesize_histogram: banks differ in mode count");
  if (setup_per_mode.size() != bank1.size()) {
    throw ConfigError("synthesize_histogram: need one HomSetup per mode (got " +
                      std::to_string(setup_per_mode.size()) + " for " +
                      std::to_string(bank1.size()) + " modes)");
  }
  if (!(options.bin_width > 0.0)) throw ConfigError("synthesize_histogram: bin width must be > 0");
  detail::require_trials(trials, "synthesize_histogram");

  SynthesizedHistogram out;
  out.peaks = matched_pair_peaks(bank1, bank2, tau);
  const double fwhm = pulse.fwhm_duration();
  const double spread = pulse.temporal_sigma() / std::numbers::sqrt2;

  for (std::size_t i = 0; i < out.peaks.size(); ++i) {
    const auto& peak = out.peaks[i];
    const double xi = std::sqrt(envelope_overlap(peak.time_1 - peak.time_2, fwhm));
    out.per_mode.push_back(simulate_coincidences(setup_per_mode[i].with_temporal_overlap(xi), trials,
                                                 derive_seed(seed, i), options.threads));
  }

  double lo = out.peaks.front().center();
  double hi = lo;
  for (const auto& p : out.peaks) {
    lo = std::min(lo, p.center());
    hi = std::max(hi, p.center());
  }
  const double artifact_spread = options.artifact_fwhm * kFwhmToSigma;
  if (options.artifact_counts > 0) {
    lo = std::min(lo, options.artifact_position);
    hi = std::max(hi, options.artifact_position);
  }
  const double margin = 8.0 * std::max(pulse.temporal_sigma(), artifact_spread);
  const double w = options.bin_width;
  const double start = std::floor((lo - margin) / w) * w;
  const auto n_bins = static_cast<std::size_t>(std::ceil((hi + margin - start) / w));
  std::vector<std::int64_t> counts(n_bins, 0);

  auto deposit = [&](double time) {
    const double idx = std::floor((time - start) / w);
    const auto clamped = static_cast<std::size_t>(std::clamp(idx, 0.0, static_cast<double>(n_bins - 1)));
    ++counts[clamped];
  };

  for (std::size_t i = 0; i < out.peaks.size(); ++i) {
    const std::uint64_t stream_seed = derive_seed(seed, 0x1000 + i);
    for (std::uint64_t e = 0; e < out.per_mode[i].coincidences(); ++e) {
      TrialRng rng(stream_seed, e, detail::kTimingStream);
      deposit(out.peaks[i].center() + spread * sample_normal(rng));
    }
  }
  if (options.artifact_counts > 0) {
    const std::uint64_t stream_seed = derive_seed(seed, 0x2000);
    for (std::uint64_t e = 0; e < options.artifact_counts; ++e) {
      TrialRng rng(stream_seed, e, detail::kTimingStream);
      deposit(options.artifact_position + artifact_spread * sample_normal(rng));
    }
  }

  std::vector<HistogramBin> bins(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) bins[b] = {start + static_cast<double>(b) * w, counts[b]};
  out.histogram = CoincidenceHistogram(w, std::move(bins), tau);
  return out;
}

}  // namespace fmhom
