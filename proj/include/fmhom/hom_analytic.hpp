#pragma once

// Closed-form HOM interference of two phase-randomized weak coherent pulses
// detected by threshold detectors with finite efficiency and dark counts.
//
// Port intensities for relative optical phase theta:
//   I_c(theta) = mu_a t^2 + mu_b r^2 + 2 t r sqrt(mu_a mu_b) xi cos(phi) cos(theta)
//   I_d(theta) = mu_a r^2 + mu_b t^2 - 2 t r sqrt(mu_a mu_b) xi cos(phi) cos(theta)
// Click probability P_x(theta) = 1 - (1 - d_x) exp(-eta_x I_x(theta)).
// Averaging over theta turns each exp(k cos theta) into I0(k), giving
//   P_c    = 1 - C I0(a)
//   P_d    = 1 - D I0(b)
//   P_coin = 1 - C I0(a) - D I0(b) + C D I0(a - b)
// with a = 2 eta_c sqrt(mu_a mu_b) t r xi cos(phi), b likewise with eta_d.
//
// xi is the wave-packet amplitude overlap of the two inputs. For Gaussian
// packets delayed by tau, xi(tau) = exp(-sigma^2 tau^2 / 4), so the
// interference part of the coincidence rate scales as
// xi^2 = exp(-sigma^2 tau^2 / 2), the shape of the ideal dip.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "fmhom/bessel.hpp"
#include "fmhom/errors.hpp"
#include "fmhom/model.hpp"
#include "fmhom/serialization.hpp"

namespace fmhom {

/// Vacuum-click suppression factors of the two detectors.
class ClickConstants {
 public:
  ClickConstants() = default;
  ClickConstants(double c_const, double d_const) : c_const_(c_const), d_const_(d_const) {
    Violations v;
    check(c_const, d_const, "", v);
    detail::throw_if(v);
  }

  static void check(double c, double d, const std::string& at, Violations& out) {
    detail::require(detail::is_probability(c), at, "c_const", "must be in [0,1]", out);
    detail::require(detail::is_probability(d), at, "d_const", "must be in [0,1]", out);
  }

  double c_const() const { return c_const_; }
  double d_const() const { return d_const_; }

  friend bool operator==(const ClickConstants&, const ClickConstants&) = default;

 private:
  double c_const_ = 1.0;
  double d_const_ = 1.0;
};

template <>
struct Codec<ClickConstants> {
  static Json write(const ClickConstants& v) {
    return {{"c_const", v.c_const()}, {"d_const", v.d_const()}};
  }
  static ClickConstants read(JsonReader& r, const ClickConstants& d) {
    const double c = r.number("c_const", d.c_const());
    const double dd = r.number("d_const", d.d_const());
    return detail::finish(
        r, d, [&](const std::string& at, Violations& out) { ClickConstants::check(c, dd, at, out); },
        [&] { return ClickConstants(c, dd); });
  }
};

/// Which algebraic form of the averaged coincidence probability to use.
enum class CoincidenceForm {
  /// Derived form, matching the phase-integration oracle.
  corrected,
  /// The widely quoted variant whose second Bessel argument lacks the factor
  /// of two and whose D constant reuses port c's mean intensity. Kept for
  /// comparison only; it does not match the oracle.
  as_printed,
};

struct SinglesPair {
  double p_c = 0.0;
  double p_d = 0.0;
  friend bool operator==(const SinglesPair&, const SinglesPair&) = default;
};

struct OracleResult {
  double coincidence = 0.0;
  SinglesPair singles;
};

inline constexpr double kDefaultDipSigma = 0.016651092223153955;  // rad/ns, 100 ns FWHM

/// Ideal Gaussian dip 1 - exp(-sigma^2 tau^2 / 2) / 2, normalized to the
/// far-delay baseline.
inline double dip_probability(double sigma, double tau) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("dip_probability: sigma must be > 0");
  return 1.0 - 0.5 * std::exp(-0.5 * sigma * sigma * tau * tau);
}

/// Wave-packet amplitude overlap of two Gaussian inputs offset by tau.
inline double temporal_overlap(double sigma, double tau) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("temporal_overlap: sigma must be > 0");
  return std::exp(-0.25 * sigma * sigma * tau * tau);
}

inline double visibility_from_extremes(double p_max, double p_min) {
  if (!(p_max > 0.0)) throw DomainError("visibility_from_extremes: p_max must be > 0");
  if (!(p_min >= 0.0) || p_min > p_max) {
    throw DomainError("visibility_from_extremes: need 0 <= p_min <= p_max");
  }
  return (p_max - p_min) / p_max;
}

namespace detail {

struct PortTerms {
  double mean_c;       // theta-independent intensity at port c
  double mean_d;
  double interference; // 2 t r sqrt(mu_a mu_b) xi cos(phi)
};

inline PortTerms port_terms(const HomSetup& s) {
  const double t = s.splitter().t_amp();
  const double r = s.splitter().r_amp();
  return {s.mu_a() * t * t + s.mu_b() * r * r, s.mu_a() * r * r + s.mu_b() * t * t,
          2.0 * t * r * std::sqrt(s.mu_a() * s.mu_b()) * s.temporal_overlap() *
              std::cos(deg_to_rad(s.pol_mismatch()))};
}

// log C and log D; log1p keeps dark-count factors exact near zero.
inline std::pair<double, double> log_click_constants(const HomSetup& s) {
  const PortTerms p = port_terms(s);
  return {-s.det_c().efficiency() * p.mean_c + std::log1p(-s.det_c().dark_count_prob()),
          -s.det_d().efficiency() * p.mean_d + std::log1p(-s.det_d().dark_count_prob())};
}

}  // namespace detail

inline ClickConstants click_constants(const HomSetup& setup) {
  const auto [log_c, log_d] = detail::log_click_constants(setup);
  return {std::exp(log_c), std::exp(log_d)};
}

/// Bessel arguments (a, b) of the two detectors.
inline std::pair<double, double> interference_arguments(const HomSetup& setup) {
  const double k = detail::port_terms(setup).interference;
  return {setup.det_c().efficiency() * k, setup.det_d().efficiency() * k};
}

inline SinglesPair singles_probs(const HomSetup& setup) {
  const auto [log_c, log_d] = detail::log_click_constants(setup);
  const auto [a, b] = interference_arguments(setup);
  return {-std::expm1(log_c + std::log1p(bessel_i0m1(a))),
          -std::expm1(log_d + std::log1p(bessel_i0m1(b)))};
}

namespace detail {

// I0(a-b) - I0(a) I0(b), expressed through I0 - 1 to avoid cancellation.
inline double bessel_cross_term(double a, double b) {
  const double ea = bessel_i0m1(a);
  const double eb = bessel_i0m1(b);
  return bessel_i0m1(a - b) - ea - eb - ea * eb;
}

inline double coincidence_as_printed(const HomSetup& s) {
  const PortTerms p = port_terms(s);
  const double c = std::exp(-s.det_c().efficiency() * p.mean_c) * (1.0 - s.det_c().dark_count_prob());
  const double d = std::exp(-s.det_d().efficiency() * p.mean_c) * (1.0 - s.det_d().dark_count_prob());
  const double a = s.det_c().efficiency() * p.interference;
  const double b = s.det_d().efficiency() * p.interference;
  return 1.0 - c * bessel_i0(a) - d * bessel_i0(0.5 * b) + c * d * bessel_i0(a - b);
}

}  // namespace detail

/// Coincidence probability averaged over the relative optical phase.
inline double coincidence_prob_averaged(const HomSetup& setup,
                                        CoincidenceForm form = CoincidenceForm::corrected) {
  if (form == CoincidenceForm::as_printed) return detail::coincidence_as_printed(setup);
  // P_coin = P_c P_d + C D [I0(a-b) - I0(a) I0(b)]
  const SinglesPair singles = singles_probs(setup);
  const auto [log_c, log_d] = detail::log_click_constants(setup);
  const auto [a, b] = interference_arguments(setup);
  const double value =
      singles.p_c * singles.p_d + std::exp(log_c + log_d) * detail::bessel_cross_term(a, b);
  return std::max(0.0, value);
}

/// Visibility 1 - P_coin / (P_c P_d) at the setup's temporal overlap.
inline double visibility_limit(const HomSetup& setup,
                               CoincidenceForm form = CoincidenceForm::corrected) {
  const SinglesPair singles = singles_probs(setup);
  if (!(singles.p_c > 0.0) || !(singles.p_d > 0.0)) {
    throw DomainError("visibility_limit: both singles probabilities must be > 0");
  }
  const double product = singles.p_c * singles.p_d;
  if (form == CoincidenceForm::as_printed) {
    return 1.0 - detail::coincidence_as_printed(setup) / product;
  }
  const auto [log_c, log_d] = detail::log_click_constants(setup);
  const auto [a, b] = interference_arguments(setup);
  return -std::exp(log_c + log_d) * detail::bessel_cross_term(a, b) / product;
}

/// Brute-force average over the relative phase by the trapezoidal rule on
/// [0, 2 pi). Independent of the Bessel closed form.
inline OracleResult phase_integral_oracle(const HomSetup& setup, int quadrature_nodes) {
  if (quadrature_nodes < 64) throw DomainError("phase_integral_oracle: need at least 64 nodes");
  const double t = setup.splitter().t_amp();
  const double r = setup.splitter().r_amp();
  const double base_c = setup.mu_a() * t * t + setup.mu_b() * r * r;
  const double base_d = setup.mu_a() * r * r + setup.mu_b() * t * t;
  const double swing = 2.0 * t * r * std::sqrt(setup.mu_a() * setup.mu_b()) *
                       setup.temporal_overlap() * std::cos(deg_to_rad(setup.pol_mismatch()));
  const double eta_c = setup.det_c().efficiency();
  const double eta_d = setup.det_d().efficiency();
  const double keep_c = 1.0 - setup.det_c().dark_count_prob();
  const double keep_d = 1.0 - setup.det_d().dark_count_prob();

  double sum_coin = 0.0;
  double sum_c = 0.0;
  double sum_d = 0.0;
  const double step = 2.0 * std::numbers::pi / quadrature_nodes;
  for (int k = 0; k < quadrature_nodes; ++k) {
    const double cos_theta = std::cos(step * k);
    const double pc = -std::expm1(std::log(keep_c) - eta_c * (base_c + swing * cos_theta));
    const double pd = -std::expm1(std::log(keep_d) - eta_d * (base_d - swing * cos_theta));
    sum_coin += pc * pd;
    sum_c += pc;
    sum_d += pd;
  }
  const double n = quadrature_nodes;
  return {sum_coin / n, {sum_c / n, sum_d / n}};
}

}  // namespace fmhom
