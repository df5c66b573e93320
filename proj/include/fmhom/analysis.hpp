#pragma once

// Measurement-side pipeline: histogram ingestion, per-mode coincidence
// windows, smoothing, normalization and HOM dip fitting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "fmhom/afc_mapping.hpp"
#include "fmhom/csv.hpp"
#include "fmhom/errors.hpp"
#include "fmhom/hom_analytic.hpp"
#include "fmhom/model.hpp"
#include "fmhom/serialization.hpp"

namespace fmhom {

class ModeWindow {
 public:
  ModeWindow() = default;
  ModeWindow(int mode_index, double window_center, double window_half_width)
      : mode_index_(mode_index), window_center_(window_center), window_half_width_(window_half_width) {
    Violations v;
    check(mode_index, window_center, window_half_width, "", v);
    detail::throw_if(v);
  }

  static void check(int mode_index, double center, double half_width, const std::string& at,
                    Violations& out) {
    detail::require(mode_index >= 1, at, "mode_index", "must be >= 1", out);
    detail::require(std::isfinite(center), at, "window_center", "must be finite", out);
    detail::require(detail::is_positive(half_width), at, "window_half_width", "must be > 0", out);
  }

  int mode_index() const { return mode_index_; }
  double window_center() const { return window_center_; }
  double window_half_width() const { return window_half_width_; }
  double lower() const { return window_center_ - window_half_width_; }
  double upper() const { return window_center_ + window_half_width_; }

  friend bool operator==(const ModeWindow&, const ModeWindow&) = default;

 private:
  int mode_index_ = 1;
  double window_center_ = 0.0;
  double window_half_width_ = 1.0;
};

template <>
struct Codec<ModeWindow> {
  static Json write(const ModeWindow& v) {
    return {{"mode_index", v.mode_index()},
            {"window_center", v.window_center()},
            {"window_half_width", v.window_half_width()}};
  }
  static ModeWindow read(JsonReader& r, const ModeWindow& d) {
    const int idx = detail::to_int(r.integer("mode_index", d.mode_index()));
    const double c = r.number("window_center", d.window_center());
    const double h = r.number("window_half_width", d.window_half_width());
    return detail::finish(
        r, d, [&](const std::string& at, Violations& out) { ModeWindow::check(idx, c, h, at, out); },
        [&] { return ModeWindow(idx, c, h); });
  }
};

class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, std::array<double, 3> last_iterate)
      : std::runtime_error(what), last_iterate_(last_iterate) {}

  /// (baseline, visibility, sigma) when the fit stopped.
  const std::array<double, 3>& last_iterate() const noexcept { return last_iterate_; }

 private:
  std::array<double, 3> last_iterate_;
};

// ---------------------------------------------------------------------------
// Histogram CSV

/// Reads `bin_width_ns=<w>` (optional) followed by `bin_start_ns,count` rows.
/// Blank lines and lines starting with '#' are skipped; an optional
/// `delay_ns=<tau>` line sets the delay. Without a width header the width is
/// the spacing of the first two bins.
inline CoincidenceHistogram load_histogram(std::istream& in) {
  std::optional<double> width;
  double delay = 0.0;
  std::vector<HistogramBin> bins;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line(trim(raw));
    if (line.empty() || line.front() == '#') continue;
    if (line.rfind("bin_width_ns=", 0) == 0 || line.rfind("delay_ns=", 0) == 0) {
      const auto eq = line.find('=');
      double value = 0.0;
      if (!parse_double(std::string(trim(line.substr(eq + 1))), value)) {
        throw ParseError(line_no, "malformed header value");
      }
      if (line[0] == 'b') {
        width = value;
      } else {
        delay = value;
      }
      continue;
    }
    if (line == "bin_start_ns,count") continue;
    const auto fields = split_fields(line);
    if (fields.size() != 2) throw ParseError(line_no, "expected 'bin_start_ns,count'");
    double start = 0.0;
    long long count = 0;
    if (!parse_double(fields[0], start)) throw ParseError(line_no, "bad bin start '" + fields[0] + "'");
    if (!parse_int64(fields[1], count)) throw ParseError(line_no, "bad count '" + fields[1] + "'");
    bins.push_back({start, count});
  }
  if (!width) {
    if (bins.size() < 2) throw ParseError(line_no, "cannot infer bin width from fewer than two bins");
    width = bins[1].bin_start - bins[0].bin_start;
  }
  return CoincidenceHistogram(*width, std::move(bins), delay);
}

inline void write_histogram_csv(std::ostream& os, const CoincidenceHistogram& hist) {
  os << "bin_width_ns=" << format_double(hist.bin_width()) << '\n';
  for (const auto& b : hist.bins()) write_row(os, {format_double(b.bin_start), std::to_string(b.count)});
}

// ---------------------------------------------------------------------------
// Per-mode windows

/// Windows around each matched pair's coincidence peak: half width is four
/// envelope standard deviations, shrunk to half the distance to the nearest
/// neighbouring peak.
inline std::vector<ModeWindow> default_mode_windows(const AfcBank& bank1, const AfcBank& bank2,
                                                    double tau, double envelope_fwhm) {
  const auto peaks = matched_pair_peaks(bank1, bank2, tau);
  std::vector<ModeWindow> windows;
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    double half = 4.0 * envelope_fwhm * kFwhmToSigma;
    for (std::size_t j = 0; j < peaks.size(); ++j) {
      if (i == j) continue;
      const double gap = std::abs(peaks[i].center() - peaks[j].center());
      if (gap > 0.0) half = std::min(half, 0.5 * gap);
    }
    windows.emplace_back(peaks[i].mode_index, peaks[i].center(), half);
  }
  return windows;
}

/// Counts per window of all bins whose centers fall inside it.
inline std::vector<std::int64_t> window_coincidences(const CoincidenceHistogram& hist,
                                                     const std::vector<ModeWindow>& windows) {
  for (std::size_t i = 0; i < windows.size(); ++i) {
    for (std::size_t j = i + 1; j < windows.size(); ++j) {
      if (windows[i].lower() < windows[j].upper() && windows[j].lower() < windows[i].upper()) {
        throw ConfigError("window_coincidences: windows for modes " +
                          std::to_string(windows[i].mode_index()) + " and " +
                          std::to_string(windows[j].mode_index()) + " overlap");
      }
    }
  }
  std::vector<std::int64_t> totals(windows.size(), 0);
  for (const auto& bin : hist.bins()) {
    const double center = bin.bin_start + 0.5 * hist.bin_width();
    for (std::size_t w = 0; w < windows.size(); ++w) {
      if (center >= windows[w].lower() && center <= windows[w].upper()) {
        totals[w] += bin.count;
        break;
      }
    }
  }
  return totals;
}

// ---------------------------------------------------------------------------
// Smoothing and normalization

/// Centered moving average. Near the ends the window is truncated to the
/// samples that exist, e.g. the first output of a 5-point average is the
/// mean of the first three inputs.
inline std::vector<double> moving_average(const std::vector<double>& series, int window = 5) {
  if (window < 1 || window % 2 == 0) throw DomainError("moving_average: window must be odd and >= 1");
  if (static_cast<std::size_t>(window) > series.size()) {
    throw DomainError("moving_average: window longer than series");
  }
  const auto n = static_cast<std::ptrdiff_t>(series.size());
  const std::ptrdiff_t half = window / 2;
  std::vector<double> out(series.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (std::ptrdiff_t k = lo; k <= hi; ++k) sum += series[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(i)] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

inline constexpr double kDefaultBaselineCutoffNs = 300.0;

struct RawPoint {
  double delay = 0.0;
  double count = 0.0;
};

/// Divides by the mean of the points with |tau| >= cutoff. Errors are
/// Poisson, sqrt(count) / baseline.
inline DipCurve normalize_curve(const std::vector<RawPoint>& points,
                                double cutoff = kDefaultBaselineCutoffNs) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : points) {
    if (std::abs(p.delay) >= cutoff) {
      sum += p.count;
      ++n;
    }
  }
  if (n < 3) throw DomainError("normalize_curve: baseline region needs at least 3 points");
  const double baseline = sum / static_cast<double>(n);
  if (!(baseline > 0.0)) throw DomainError("normalize_curve: baseline mean must be > 0");
  std::vector<DipPoint> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    out.push_back({p.delay, p.count / baseline, std::sqrt(std::max(0.0, p.count)) / baseline});
  }
  return DipCurve(std::move(out));
}

// ---------------------------------------------------------------------------
// Dip fitting

namespace detail {

using Params3 = std::array<double, 3>;

inline double dip_model(const Params3& x, double tau) {
  return x[0] * (1.0 - x[1] * std::exp(-0.5 * x[2] * x[2] * tau * tau));
}

// Solves the 3x3 symmetric system A d = g by Gaussian elimination with
// partial pivoting; returns false when A is numerically singular.
inline bool solve3(std::array<std::array<double, 3>, 3> a, Params3 g, Params3& d) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 3; ++row) {
      if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
    }
    if (!(std::abs(a[pivot][col]) > 1e-300)) return false;
    std::swap(a[col], a[pivot]);
    std::swap(g[col], g[pivot]);
    for (int row = col + 1; row < 3; ++row) {
      const double f = a[row][col] / a[col][col];
      for (int k = col; k < 3; ++k) a[row][k] -= f * a[col][k];
      g[row] -= f * g[col];
    }
  }
  for (int row = 2; row >= 0; --row) {
    double s = g[row];
    for (int k = row + 1; k < 3; ++k) s -= a[row][k] * d[k];
    d[row] = s / a[row][row];
  }
  return std::isfinite(d[0]) && std::isfinite(d[1]) && std::isfinite(d[2]);
}

inline std::vector<double> fit_weights(const DipCurve& curve) {
  double smallest = 0.0;
  for (const auto& p : curve.points()) {
    if (p.std_error > 0.0 && (smallest == 0.0 || p.std_error < smallest)) smallest = p.std_error;
  }
  std::vector<double> w;
  for (const auto& p : curve.points()) {
    if (smallest == 0.0) {
      w.push_back(1.0);  // no error bars at all: unweighted
    } else {
      const double se = p.std_error > 0.0 ? p.std_error : smallest;
      w.push_back(1.0 / (se * se));
    }
  }
  return w;
}

inline double weighted_cost(const DipCurve& curve, const std::vector<double>& w, const Params3& x) {
  double cost = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto& p = curve.points()[i];
    const double r = p.normalized_coincidence - dip_model(x, p.delay);
    cost += w[i] * r * r;
  }
  return cost;
}

inline Params3 clamp_params(Params3 x) {
  x[1] = std::clamp(x[1], 0.0, 1.0);
  x[2] = std::abs(x[2]);
  return x;
}

struct InitialGuess {
  Params3 x;
  double half_depth_delay;
};

inline InitialGuess initial_guess(const DipCurve& curve) {
  const auto& pts = curve.points();
  double max_abs_tau = 0.0;
  for (const auto& p : pts) max_abs_tau = std::max(max_abs_tau, std::abs(p.delay));

  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : pts) {
    if (std::abs(p.delay) >= 0.6 * max_abs_tau) {
      sum += p.normalized_coincidence;
      ++n;
    }
  }
  const double baseline = n > 0 ? sum / static_cast<double>(n) : 1.0;

  std::size_t i_min = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].normalized_coincidence < pts[i_min].normalized_coincidence) i_min = i;
  }
  const double visibility =
      baseline > 0.0 ? std::clamp(1.0 - pts[i_min].normalized_coincidence / baseline, 0.0, 1.0) : 0.0;

  // Half-depth crossing on each side of the minimum, measured from it.
  double half = 0.0;
  if (visibility > 1e-12) {
    const double level = baseline * (1.0 - 0.5 * visibility);
    double half_sum = 0.0;
    int sides = 0;
    for (std::size_t i = i_min + 1; i < pts.size(); ++i) {
      if (pts[i].normalized_coincidence >= level) {
        half_sum += std::abs(pts[i].delay - pts[i_min].delay);
        ++sides;
        break;
      }
    }
    for (std::size_t i = i_min; i-- > 0;) {
      if (pts[i].normalized_coincidence >= level) {
        half_sum += std::abs(pts[i].delay - pts[i_min].delay);
        ++sides;
        break;
      }
    }
    if (sides > 0) half = half_sum / sides;
  }
  if (!(half > 0.0)) half = 0.25 * max_abs_tau;
  const double sigma = std::sqrt(2.0 * std::log(2.0)) / half;
  return {{baseline, visibility, sigma}, half};
}

}  // namespace detail

struct FitOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-10;
};

/// Weighted Levenberg-Marquardt fit of B (1 - V exp(-sigma^2 tau^2 / 2)).
/// Weights are 1/std_error^2; points without an error bar get the smallest
/// error in the curve, and a curve without any error bars is fit unweighted.
inline DipFitResult fit_dip(const DipCurve& curve, const FitOptions& options = {}) {
  const auto& pts = curve.points();
  if (pts.size() < 5) throw DomainError("fit_dip: need at least 5 points");
  auto guess = detail::initial_guess(curve);
  {
    bool below = false;
    bool above = false;
    for (const auto& p : pts) {
      below = below || std::abs(p.delay) < guess.half_depth_delay;
      above = above || std::abs(p.delay) > guess.half_depth_delay;
    }
    if (!below || !above) {
      throw DomainError("fit_dip: need points on both sides of the initial width guess");
    }
  }

  const auto w = detail::fit_weights(curve);
  detail::Params3 x = guess.x;
  double cost = detail::weighted_cost(curve, w, x);
  double lambda = 1e-3;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    std::array<std::array<double, 3>, 3> jtj{};
    detail::Params3 jtr{};
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double tau = pts[i].delay;
      const double g = std::exp(-0.5 * x[2] * x[2] * tau * tau);
      const detail::Params3 jac = {1.0 - x[1] * g, -x[0] * g, x[0] * x[1] * g * x[2] * tau * tau};
      const double r = pts[i].normalized_coincidence - detail::dip_model(x, tau);
      for (int a = 0; a < 3; ++a) {
        jtr[a] += w[i] * jac[a] * r;
        for (int b = 0; b < 3; ++b) jtj[a][b] += w[i] * jac[a] * jac[b];
      }
    }
    double scale = 0.0;
    for (int a = 0; a < 3; ++a) scale = std::max(scale, jtj[a][a]);
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw FitError("fit_dip: singular normal equations", x);
    }

    bool accepted = false;
    while (lambda < 1e20) {
      auto damped = jtj;
      // Marquardt scaling; the small absolute floor keeps parameters with a
      // vanishing gradient (sigma when V = 0) from making the system singular.
      for (int a = 0; a < 3; ++a) damped[a][a] += lambda * (jtj[a][a] + 1e-12 * scale);
      detail::Params3 step{};
      if (!detail::solve3(damped, jtr, step)) {
        lambda *= 10.0;
        continue;
      }
      const detail::Params3 trial =
          detail::clamp_params({x[0] + step[0], x[1] + step[1], x[2] + step[2]});
      const double trial_cost = detail::weighted_cost(curve, w, trial);
      if (std::isfinite(trial_cost) && trial_cost <= cost && trial[2] > 0.0) {
        double change = 0.0;
        for (int a = 0; a < 3; ++a) {
          change = std::max(change, std::abs(trial[a] - x[a]) / std::max(std::abs(x[a]), 1e-300));
        }
        x = trial;
        const bool no_gain = trial_cost == cost;
        cost = trial_cost;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (change < options.relative_tolerance || no_gain) {
          return DipFitResult(x[0], x[1], x[2], std::sqrt(cost));
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!std::isfinite(cost) || !(x[0] > 0.0)) throw FitError("fit_dip: diverged", x);
    if (!accepted) break;  // no downhill step left: at the minimum
  }
  if (!std::isfinite(cost) || !(x[2] > 0.0)) throw FitError("fit_dip: diverged", x);
  return DipFitResult(x[0], x[1], x[2], std::sqrt(cost));
}

struct VisibilityReport {
  double visibility = 0.0;
  double p_max = 0.0;
  double p_min = 0.0;
};

inline VisibilityReport visibility_report(const DipFitResult& fit) {
  return {fit.visibility(), fit.p_max(), fit.p_min()};
}

// ---------------------------------------------------------------------------
// Curve CSV

/// Header line, then rows tau_ns,normalized_coincidence,std_error.
inline void write_dip_curve_csv(std::ostream& os, const DipCurve& curve) {
  os << "tau_ns,normalized_coincidence,std_error\n";
  for (const auto& p : curve.points()) {
    write_row(os, {format_double(p.delay), format_double(p.normalized_coincidence),
                   format_double(p.std_error)});
  }
}

/// Reads a dip curve. Three-column rows are taken as already normalized;
/// two-column rows (tau_ns,count) are raw counts and are normalized with
/// normalize_curve. A non-numeric first line is treated as a header.
inline DipCurve load_dip_curve(std::istream& in, double baseline_cutoff = kDefaultBaselineCutoffNs) {
  std::vector<DipPoint> normalized;
  std::vector<RawPoint> raw;
  std::string text;
  std::size_t line_no = 0;
  bool first_data = true;
  while (std::getline(in, text)) {
    ++line_no;
    const std::string line(trim(text));
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_fields(line);
    double tau = 0.0;
    if (!parse_double(fields[0], tau)) {
      if (first_data) {
        first_data = false;
        continue;  // header
      }
      throw ParseError(line_no, "bad delay '" + fields[0] + "'");
    }
    first_data = false;
    if (fields.size() == 3) {
      if (!raw.empty()) throw ParseError(line_no, "mixed 2- and 3-column rows");
      double v = 0.0;
      double e = 0.0;
      if (!parse_double(fields[1], v) || !parse_double(fields[2], e)) {
        throw ParseError(line_no, "bad numeric field");
      }
      normalized.push_back({tau, v, e});
    } else if (fields.size() == 2) {
      if (!normalized.empty()) throw ParseError(line_no, "mixed 2- and 3-column rows");
      double c = 0.0;
      if (!parse_double(fields[1], c)) throw ParseError(line_no, "bad count '" + fields[1] + "'");
      if (c < 0.0) throw ParseError(line_no, "negative count");
      raw.push_back({tau, c});
    } else {
      throw ParseError(line_no, "expected 2 or 3 columns");
    }
  }
  if (!raw.empty()) return normalize_curve(raw, baseline_cutoff);
  if (normalized.empty()) throw ParseError(line_no, "no data rows");
  return DipCurve(std::move(normalized));
}

/// Fit report with the external field names.
inline Json fit_report_json(const DipFitResult& fit, std::size_t n_points) {
  return {{"baseline", fit.baseline()},
          {"visibility", fit.visibility()},
          {"sigma_rad_per_ns", fit.sigma()},
          {"residual_norm", fit.residual_norm()},
          {"n_points", n_points}};
}

}  // namespace fmhom
