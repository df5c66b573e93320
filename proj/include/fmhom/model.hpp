#pragma once

// Shared value types. Every constructor enforces the type's invariants and
// throws ValidationError listing all of the rules it broke, so a constructed
// value is always valid. Units at this boundary: ns, MHz, µs (storage
// budgets only), degrees.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "fmhom/errors.hpp"

namespace fmhom {

namespace detail {

inline std::string join_path(const std::string& prefix, const std::string& field) {
  return prefix.empty() ? field : prefix + "." + field;
}

inline void require(bool ok, const std::string& prefix, const std::string& field,
                    std::string rule, Violations& out) {
  if (!ok) out.push_back({join_path(prefix, field), std::move(rule)});
}

inline bool is_probability(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }
inline bool is_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }
inline bool is_positive(double x) { return std::isfinite(x) && x > 0.0; }

inline std::string short_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

inline void throw_if(const Violations& v) {
  if (!v.empty()) throw ValidationError(v);
}

}  // namespace detail

inline constexpr double kFwhmToSigma = 0.42466090014400953;  // 1/(2*sqrt(2 ln 2))
inline constexpr double kDefaultPulseFwhmNs = 100.0;
inline constexpr double kDefaultModeSpacingMhz = 100.0;
inline constexpr double kDefaultAfcBandwidthMhz = 9.2;
inline constexpr double kHistogramBinNs = 8.192;

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

class PulseSpec {
 public:
  PulseSpec() = default;
  PulseSpec(double fwhm_duration, double mean_photons_per_mode, int mode_count)
      : fwhm_duration_(fwhm_duration),
        mean_photons_per_mode_(mean_photons_per_mode),
        mode_count_(mode_count) {
    Violations v;
    check(fwhm_duration, mean_photons_per_mode, mode_count, "", v);
    detail::throw_if(v);
  }

  static void check(double fwhm, double mean_photons, int modes, const std::string& at,
                    Violations& out) {
    detail::require(detail::is_positive(fwhm), at, "fwhm_duration", "must be > 0", out);
    detail::require(detail::is_nonneg(mean_photons), at, "mean_photons_per_mode",
                    "must be >= 0", out);
    detail::require(modes >= 1, at, "mode_count", "must be a positive integer", out);
  }

  double fwhm_duration() const { return fwhm_duration_; }
  double mean_photons_per_mode() const { return mean_photons_per_mode_; }
  int mode_count() const { return mode_count_; }

  /// Temporal standard deviation of the Gaussian intensity envelope (ns).
  double temporal_sigma() const { return fwhm_duration_ * kFwhmToSigma; }

  /// Spectral width parameter of the Gaussian dip (rad/ns) for a
  /// transform-limited pulse: 1/(sqrt(2) * temporal std).
  double dip_sigma() const { return 1.0 / (std::numbers::sqrt2 * temporal_sigma()); }

  friend bool operator==(const PulseSpec&, const PulseSpec&) = default;

 private:
  double fwhm_duration_ = kDefaultPulseFwhmNs;
  double mean_photons_per_mode_ = 0.064;
  int mode_count_ = 3;
};

class DetectorSpec {
 public:
  DetectorSpec() = default;
  DetectorSpec(double efficiency, double dark_count_prob)
      : efficiency_(efficiency), dark_count_prob_(dark_count_prob) {
    Violations v;
    check(efficiency, dark_count_prob, "", v);
    detail::throw_if(v);
  }

  static void check(double efficiency, double dark, const std::string& at, Violations& out) {
    detail::require(detail::is_probability(efficiency), at, "efficiency", "must be in [0,1]",
                    out);
    detail::require(detail::is_probability(dark), at, "dark_count_prob", "must be in [0,1]",
                    out);
  }

  static DetectorSpec ideal() { return {1.0, 0.0}; }

  double efficiency() const { return efficiency_; }
  double dark_count_prob() const { return dark_count_prob_; }

  friend bool operator==(const DetectorSpec&, const DetectorSpec&) = default;

 private:
  double efficiency_ = 0.47;
  double dark_count_prob_ = 1.5e-4;
};

class SplitterSpec {
 public:
  static constexpr double kLosslessTolerance = 1e-12;

  SplitterSpec() = default;
  SplitterSpec(double t_amp, double r_amp) : t_amp_(t_amp), r_amp_(r_amp) {
    Violations v;
    check(t_amp, r_amp, "", v);
    detail::throw_if(v);
  }

  static void check(double t, double r, const std::string& at, Violations& out) {
    detail::require(detail::is_probability(t), at, "t_amp", "must be in [0,1]", out);
    detail::require(detail::is_probability(r), at, "r_amp", "must be in [0,1]", out);
    const double sum = t * t + r * r;
    if (!(std::abs(sum - 1.0) <= kLosslessTolerance)) {
      out.push_back({detail::join_path(at, "t_amp"),
                     "t^2+r^2=" + detail::short_number(sum) + " != 1 (lossless splitter)"});
    }
  }

  static SplitterSpec balanced() { return {std::numbers::sqrt2 / 2, std::numbers::sqrt2 / 2}; }

  double t_amp() const { return t_amp_; }
  double r_amp() const { return r_amp_; }

  friend bool operator==(const SplitterSpec&, const SplitterSpec&) = default;

 private:
  double t_amp_ = std::numbers::sqrt2 / 2;
  double r_amp_ = std::numbers::sqrt2 / 2;
};

/// Parameters of one two-input HOM measurement. The defaults are the mode-1
/// operating point (mu = 0.064, eta = 0.47, d = 1.5e-4, balanced splitter,
/// 3 degree polarization mismatch, full temporal overlap).
class HomSetup {
 public:
  HomSetup() = default;
  HomSetup(double mu_a, double mu_b, DetectorSpec det_c, DetectorSpec det_d,
           SplitterSpec splitter, double pol_mismatch, double temporal_overlap)
      : mu_a_(mu_a),
        mu_b_(mu_b),
        det_c_(det_c),
        det_d_(det_d),
        splitter_(splitter),
        pol_mismatch_(pol_mismatch),
        temporal_overlap_(temporal_overlap) {
    Violations v;
    check(mu_a, mu_b, pol_mismatch, temporal_overlap, "", v);
    detail::throw_if(v);
  }

  static void check(double mu_a, double mu_b, double pol_mismatch, double overlap,
                    const std::string& at, Violations& out) {
    detail::require(detail::is_nonneg(mu_a), at, "mu_a", "must be >= 0", out);
    detail::require(detail::is_nonneg(mu_b), at, "mu_b", "must be >= 0", out);
    detail::require(std::isfinite(pol_mismatch) && pol_mismatch >= 0.0 && pol_mismatch < 90.0,
                    at, "pol_mismatch", "must be in [0,90) degrees", out);
    detail::require(detail::is_probability(overlap), at, "temporal_overlap", "must be in [0,1]",
                    out);
  }

  /// Symmetric setup with equal mean photon numbers and identical detectors.
  static HomSetup symmetric(double mu, DetectorSpec det = {}, double pol_mismatch = 3.0,
                            double temporal_overlap = 1.0) {
    return {mu, mu, det, det, SplitterSpec::balanced(), pol_mismatch, temporal_overlap};
  }

  double mu_a() const { return mu_a_; }
  double mu_b() const { return mu_b_; }
  const DetectorSpec& det_c() const { return det_c_; }
  const DetectorSpec& det_d() const { return det_d_; }
  const SplitterSpec& splitter() const { return splitter_; }
  double pol_mismatch() const { return pol_mismatch_; }
  double temporal_overlap() const { return temporal_overlap_; }

  HomSetup with_temporal_overlap(double xi) const {
    return {mu_a_, mu_b_, det_c_, det_d_, splitter_, pol_mismatch_, xi};
  }
  HomSetup with_mean_photons(double mu_a, double mu_b) const {
    return {mu_a, mu_b, det_c_, det_d_, splitter_, pol_mismatch_, temporal_overlap_};
  }

  friend bool operator==(const HomSetup&, const HomSetup&) = default;

 private:
  double mu_a_ = 0.064;
  double mu_b_ = 0.064;
  DetectorSpec det_c_;
  DetectorSpec det_d_;
  SplitterSpec splitter_;
  double pol_mismatch_ = 3.0;
  double temporal_overlap_ = 1.0;
};

class AfcModeSpec {
 public:
  AfcModeSpec() = default;
  AfcModeSpec(double center_offset, double comb_spacing, double bandwidth,
              double echo_efficiency)
      : center_offset_(center_offset),
        comb_spacing_(comb_spacing),
        bandwidth_(bandwidth),
        echo_efficiency_(echo_efficiency) {
    Violations v;
    check(center_offset, comb_spacing, bandwidth, echo_efficiency, "", v);
    detail::throw_if(v);
  }

  static void check(double center, double spacing, double bandwidth, double efficiency,
                    const std::string& at, Violations& out) {
    detail::require(std::isfinite(center), at, "center_offset", "must be finite", out);
    detail::require(detail::is_positive(spacing), at, "comb_spacing", "must be > 0", out);
    detail::require(std::isfinite(bandwidth) && bandwidth > spacing, at, "bandwidth",
                    "must exceed comb_spacing", out);
    detail::require(detail::is_probability(efficiency), at, "echo_efficiency",
                    "must be in [0,1]", out);
  }

  double center_offset() const { return center_offset_; }
  double comb_spacing() const { return comb_spacing_; }
  double bandwidth() const { return bandwidth_; }
  double echo_efficiency() const { return echo_efficiency_; }

  friend bool operator==(const AfcModeSpec&, const AfcModeSpec&) = default;

 private:
  double center_offset_ = 0.0;
  double comb_spacing_ = 1.533;
  double bandwidth_ = kDefaultAfcBandwidthMhz;
  double echo_efficiency_ = 0.10;
};

/// Frequency-multiplexed set of combs, one per mode, on a uniform grid.
class AfcBank {
 public:
  static constexpr double kGridTolerance = 1e-9;

  AfcBank() : AfcBank(default_bank()) {}
  AfcBank(std::vector<AfcModeSpec> modes, double mode_spacing)
      : modes_(std::move(modes)), mode_spacing_(mode_spacing) {
    Violations v;
    check(modes_, mode_spacing_, "", v);
    detail::throw_if(v);
  }

  static void check(const std::vector<AfcModeSpec>& modes, double mode_spacing,
                    const std::string& at, Violations& out) {
    detail::require(!modes.empty(), at, "modes", "bank must contain at least one mode", out);
    detail::require(detail::is_positive(mode_spacing), at, "mode_spacing", "must be > 0", out);
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const std::string here = detail::join_path(at, "modes[" + std::to_string(i) + "]");
      if (!(modes[i].bandwidth() < mode_spacing)) {
        out.push_back({here + ".bandwidth", "must be < mode_spacing (combs overlap spectrally)"});
      }
      if (i > 0) {
        const double step = modes[i].center_offset() - modes[i - 1].center_offset();
        if (!(std::abs(step - mode_spacing) <= kGridTolerance * std::max(1.0, mode_spacing))) {
          out.push_back({here + ".center_offset",
                         "must be previous offset + mode_spacing (got step " +
                             detail::short_number(step) + ")"});
        }
      }
    }
  }

  /// Three combs at 0/100/200 MHz with 1.533/0.92/0.652 MHz teeth.
  static AfcBank default_bank(double echo_efficiency = 0.10) {
    return with_spacings({1.533, 0.92, 0.652}, echo_efficiency);
  }

  static AfcBank with_spacings(const std::vector<double>& comb_spacings,
                               double echo_efficiency = 0.10,
                               double mode_spacing = kDefaultModeSpacingMhz,
                               double bandwidth = kDefaultAfcBandwidthMhz) {
    std::vector<AfcModeSpec> modes;
    for (std::size_t i = 0; i < comb_spacings.size(); ++i) {
      modes.emplace_back(static_cast<double>(i) * mode_spacing, comb_spacings[i], bandwidth,
                         echo_efficiency);
    }
    return {std::move(modes), mode_spacing};
  }

  const std::vector<AfcModeSpec>& modes() const { return modes_; }
  double mode_spacing() const { return mode_spacing_; }
  std::size_t size() const { return modes_.size(); }

  friend bool operator==(const AfcBank&, const AfcBank&) = default;

 private:
  std::vector<AfcModeSpec> modes_;
  double mode_spacing_ = kDefaultModeSpacingMhz;
};

/// Echo re-emitted by one comb. mode_index is 1-based.
class EchoEvent {
 public:
  EchoEvent() = default;
  EchoEvent(int mode_index, double retrieval_time, double envelope_fwhm,
            double relative_intensity)
      : mode_index_(mode_index),
        retrieval_time_(retrieval_time),
        envelope_fwhm_(envelope_fwhm),
        relative_intensity_(relative_intensity) {
    Violations v;
    check(mode_index, retrieval_time, envelope_fwhm, relative_intensity, "", v);
    detail::throw_if(v);
  }

  static void check(int mode_index, double retrieval_time, double fwhm, double intensity,
                    const std::string& at, Violations& out) {
    detail::require(mode_index >= 1, at, "mode_index", "must be >= 1", out);
    detail::require(std::isfinite(retrieval_time), at, "retrieval_time", "must be finite", out);
    detail::require(detail::is_positive(fwhm), at, "envelope_fwhm", "must be > 0", out);
    detail::require(detail::is_nonneg(intensity), at, "relative_intensity", "must be >= 0", out);
  }

  int mode_index() const { return mode_index_; }
  double retrieval_time() const { return retrieval_time_; }
  double envelope_fwhm() const { return envelope_fwhm_; }
  double relative_intensity() const { return relative_intensity_; }

  friend bool operator==(const EchoEvent&, const EchoEvent&) = default;

 private:
  int mode_index_ = 1;
  double retrieval_time_ = 0.0;
  double envelope_fwhm_ = kDefaultPulseFwhmNs;
  double relative_intensity_ = 0.0;
};

class LinkParams {
 public:
  LinkParams() = default;
  LinkParams(double p_arrival, int n_modes, double eta_two_photon = 1.0,
             double eta_one_photon = 1.0)
      : p_arrival_(p_arrival),
        n_modes_(n_modes),
        eta_two_photon_(eta_two_photon),
        eta_one_photon_(eta_one_photon) {
    Violations v;
    check(p_arrival, n_modes, eta_two_photon, eta_one_photon, "", v);
    detail::throw_if(v);
  }

  static void check(double p, int n, double eta2, double eta1, const std::string& at,
                    Violations& out) {
    detail::require(detail::is_probability(p), at, "p_arrival", "must be in [0,1]", out);
    detail::require(n >= 1, at, "n_modes", "must be >= 1", out);
    detail::require(detail::is_nonneg(eta2), at, "eta_two_photon", "must be >= 0", out);
    detail::require(detail::is_nonneg(eta1), at, "eta_one_photon", "must be >= 0", out);
  }

  double p_arrival() const { return p_arrival_; }
  int n_modes() const { return n_modes_; }
  double eta_two_photon() const { return eta_two_photon_; }
  double eta_one_photon() const { return eta_one_photon_; }

  LinkParams with_modes(int n) const { return {p_arrival_, n, eta_two_photon_, eta_one_photon_}; }

  friend bool operator==(const LinkParams&, const LinkParams&) = default;

 private:
  double p_arrival_ = 0.1;
  int n_modes_ = 3;
  double eta_two_photon_ = 1.0;
  double eta_one_photon_ = 1.0;
};

/// Inputs of the heralding-rate bound. Defaults: three modes, 1.52 µs
/// storage, 10 % echo efficiency, 0.1 fiber transmission, 0.5 conversion.
class RateParams {
 public:
  RateParams() = default;
  RateParams(int n_modes, double t_afc, double eta_afc, double l_fiber, double r_wc)
      : n_modes_(n_modes), t_afc_(t_afc), eta_afc_(eta_afc), l_fiber_(l_fiber), r_wc_(r_wc) {
    Violations v;
    check(n_modes, t_afc, eta_afc, l_fiber, r_wc, "", v);
    detail::throw_if(v);
  }

  static void check(int n, double t_afc, double eta, double l, double r, const std::string& at,
                    Violations& out) {
    detail::require(n >= 1, at, "n_modes", "must be >= 1", out);
    detail::require(detail::is_positive(t_afc), at, "t_afc", "must be > 0", out);
    detail::require(detail::is_probability(eta), at, "eta_afc", "must be in [0,1]", out);
    detail::require(detail::is_probability(l), at, "l_fiber", "must be in [0,1]", out);
    detail::require(detail::is_probability(r), at, "r_wc", "must be in [0,1]", out);
  }

  /// Scaled-up operating point: 30 modes, 13.3 µs, 20 % efficiency, 0.6 conversion.
  static RateParams optimum() { return {30, 13.3, 0.2, 0.1, 0.6}; }

  int n_modes() const { return n_modes_; }
  double t_afc() const { return t_afc_; }
  double eta_afc() const { return eta_afc_; }
  double l_fiber() const { return l_fiber_; }
  double r_wc() const { return r_wc_; }

  RateParams with_modes(int n) const { return {n, t_afc_, eta_afc_, l_fiber_, r_wc_}; }

  friend bool operator==(const RateParams&, const RateParams&) = default;

 private:
  int n_modes_ = 3;
  double t_afc_ = 1.52;
  double eta_afc_ = 0.1;
  double l_fiber_ = 0.1;
  double r_wc_ = 0.5;
};

struct HistogramBin {
  double bin_start = 0.0;
  std::int64_t count = 0;
  friend bool operator==(const HistogramBin&, const HistogramBin&) = default;
};

class CoincidenceHistogram {
 public:
  /// Relative slack allowed between consecutive bin starts and bin_width.
  static constexpr double kContiguityTolerance = 1e-6;

  CoincidenceHistogram() = default;
  CoincidenceHistogram(double bin_width, std::vector<HistogramBin> bins, double delay_setting = 0.0)
      : bin_width_(bin_width), bins_(std::move(bins)), delay_setting_(delay_setting) {
    Violations v;
    check(bin_width_, bins_, delay_setting_, "", v);
    detail::throw_if(v);
  }

  static void check(double width, const std::vector<HistogramBin>& bins, double delay,
                    const std::string& at, Violations& out) {
    detail::require(detail::is_positive(width), at, "bin_width", "must be > 0", out);
    detail::require(std::isfinite(delay), at, "delay_setting", "must be finite", out);
    for (std::size_t i = 0; i < bins.size(); ++i) {
      const std::string here = detail::join_path(at, "bins[" + std::to_string(i) + "]");
      if (bins[i].count < 0) out.push_back({here + ".count", "must be >= 0"});
      if (!std::isfinite(bins[i].bin_start)) out.push_back({here + ".bin_start", "must be finite"});
      if (i > 0 && detail::is_positive(width)) {
        const double step = bins[i].bin_start - bins[i - 1].bin_start;
        if (!(std::abs(step - width) <= kContiguityTolerance * width)) {
          out.push_back({here + ".bin_start", "bins must be contiguous"});
        }
      }
    }
  }

  double bin_width() const { return bin_width_; }
  const std::vector<HistogramBin>& bins() const { return bins_; }
  double delay_setting() const { return delay_setting_; }

  std::int64_t total() const {
    std::int64_t sum = 0;
    for (const auto& b : bins_) sum += b.count;
    return sum;
  }

  friend bool operator==(const CoincidenceHistogram&, const CoincidenceHistogram&) = default;

 private:
  double bin_width_ = kHistogramBinNs;
  std::vector<HistogramBin> bins_;
  double delay_setting_ = 0.0;
};

struct DipPoint {
  double delay = 0.0;
  double normalized_coincidence = 0.0;
  double std_error = 0.0;
  friend bool operator==(const DipPoint&, const DipPoint&) = default;
};

class DipCurve {
 public:
  DipCurve() = default;
  explicit DipCurve(std::vector<DipPoint> points) : points_(std::move(points)) {
    Violations v;
    check(points_, "", v);
    detail::throw_if(v);
  }

  static void check(const std::vector<DipPoint>& points, const std::string& at, Violations& out) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const std::string here = detail::join_path(at, "points[" + std::to_string(i) + "]");
      const auto& p = points[i];
      if (!std::isfinite(p.delay)) out.push_back({here + ".delay", "must be finite"});
      if (!detail::is_nonneg(p.normalized_coincidence)) {
        out.push_back({here + ".normalized_coincidence", "must be >= 0"});
      }
      if (!detail::is_nonneg(p.std_error)) out.push_back({here + ".std_error", "must be >= 0"});
      if (i > 0 && !(p.delay > points[i - 1].delay)) {
        out.push_back({here + ".delay", "delays must be strictly increasing"});
      }
    }
  }

  const std::vector<DipPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }

  friend bool operator==(const DipCurve&, const DipCurve&) = default;

 private:
  std::vector<DipPoint> points_;
};

/// Parameters of P(tau) = baseline * (1 - visibility * exp(-sigma^2 tau^2 / 2)).
class DipFitResult {
 public:
  DipFitResult() = default;
  DipFitResult(double baseline, double visibility, double sigma, double residual_norm)
      : baseline_(baseline), visibility_(visibility), sigma_(sigma), residual_norm_(residual_norm) {
    Violations v;
    check(baseline, visibility, sigma, residual_norm, "", v);
    detail::throw_if(v);
  }

  static void check(double baseline, double visibility, double sigma, double residual,
                    const std::string& at, Violations& out) {
    detail::require(std::isfinite(baseline), at, "baseline", "must be finite", out);
    detail::require(detail::is_probability(visibility), at, "visibility", "must be in [0,1]",
                    out);
    detail::require(detail::is_positive(sigma), at, "sigma", "must be > 0", out);
    detail::require(detail::is_nonneg(residual), at, "residual_norm", "must be >= 0", out);
  }

  double baseline() const { return baseline_; }
  double visibility() const { return visibility_; }
  double sigma() const { return sigma_; }
  double residual_norm() const { return residual_norm_; }
  double p_max() const { return baseline_; }
  double p_min() const { return baseline_ * (1.0 - visibility_); }

  friend bool operator==(const DipFitResult&, const DipFitResult&) = default;

 private:
  double baseline_ = 1.0;
  double visibility_ = 0.0;
  double sigma_ = 1.0;
  double residual_norm_ = 0.0;
};

}  // namespace fmhom
