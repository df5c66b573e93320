#pragma once

// JSON codecs for the value types. Field names are the snake_case names of
// the accessors. Decoding goes through validate<T>(), which reports every
// violated rule (with its field path) in a single ValidationError. Missing
// fields fall back to the type's default.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "fmhom/errors.hpp"
#include "fmhom/model.hpp"

namespace fmhom {

using Json = nlohmann::json;

template <class T>
struct Codec;

/// Cursor over one JSON object that records type problems as violations.
class JsonReader {
 public:
  JsonReader(const Json& node, std::string path, Violations& out)
      : node_(node), path_(std::move(path)), out_(out) {
    if (!node_.is_object()) out_.push_back({path_, "expected a JSON object"});
  }

  const std::string& path() const { return path_; }
  Violations& violations() { return out_; }

  bool has(const char* key) const { return node_.is_object() && node_.contains(key); }

  double number(const char* key, double fallback) {
    if (!has(key)) return fallback;
    const Json& v = node_.at(key);
    if (v.is_number()) return v.get<double>();
    // Non-finite values are written as strings by JSON serializers.
    if (v.is_string()) {
      const auto& s = v.get_ref<const std::string&>();
      if (s == "inf") return std::numeric_limits<double>::infinity();
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
      if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    out_.push_back({detail::join_path(path_, key), "expected a number"});
    return fallback;
  }

  std::int64_t integer(const char* key, std::int64_t fallback) {
    if (!has(key)) return fallback;
    const Json& v = node_.at(key);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d == static_cast<double>(static_cast<std::int64_t>(d))) return static_cast<std::int64_t>(d);
    }
    out_.push_back({detail::join_path(path_, key), "expected an integer"});
    return fallback;
  }

  std::uint64_t unsigned_integer(const char* key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const Json& v = node_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
    out_.push_back({detail::join_path(path_, key), "expected a non-negative integer"});
    return fallback;
  }

  template <class T>
  T object(const char* key, const T& fallback) {
    if (!has(key)) return fallback;
    JsonReader sub(node_.at(key), detail::join_path(path_, key), out_);
    return Codec<T>::read(sub, fallback);
  }

  std::vector<double> numbers(const char* key, const std::vector<double>& fallback) {
    if (!has(key)) return fallback;
    const Json& v = node_.at(key);
    const std::string here = detail::join_path(path_, key);
    if (!v.is_array()) {
      out_.push_back({here, "expected an array"});
      return fallback;
    }
    std::vector<double> items;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i].is_number()) {
        items.push_back(v[i].get<double>());
      } else {
        out_.push_back({here + "[" + std::to_string(i) + "]", "expected a number"});
      }
    }
    return items;
  }

  template <class T>
  std::vector<T> array(const char* key, const std::vector<T>& fallback) {
    if (!has(key)) return fallback;
    const Json& v = node_.at(key);
    const std::string here = detail::join_path(path_, key);
    if (!v.is_array()) {
      out_.push_back({here, "expected an array"});
      return fallback;
    }
    std::vector<T> items;
    items.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      JsonReader sub(v[i], here + "[" + std::to_string(i) + "]", out_);
      items.push_back(Codec<T>::read(sub, T{}));
    }
    return items;
  }

 private:
  const Json& node_;
  std::string path_;
  Violations& out_;
};

namespace detail {

/// Runs T::check-style validation; constructs only when no new violations.
template <class T, class Check, class Make>
T finish(JsonReader& r, const T& fallback, Check check, Make make) {
  const auto before = r.violations().size();
  check(r.path(), r.violations());
  if (r.violations().size() != before) return fallback;
  return make();
}

inline int to_int(std::int64_t v) {
  if (v > std::numeric_limits<int>::max()) return std::numeric_limits<int>::max();
  if (v < std::numeric_limits<int>::min()) return std::numeric_limits<int>::min();
  return static_cast<int>(v);
}

}  // namespace detail

template <>
struct Codec<PulseSpec> {
  static Json write(const PulseSpec& v) {
    return {{"fwhm_duration", v.fwhm_duration()},
            {"mean_photons_per_mode", v.mean_photons_per_mode()},
            {"mode_count", v.mode_count()}};
  }
  static PulseSpec read(JsonReader& r, const PulseSpec& d) {
    const double fwhm = r.number("fwhm_duration", d.fwhm_duration());
    const double mu = r.number("mean_photons_per_mode", d.mean_photons_per_mode());
    const int modes = detail::to_int(r.integer("mode_count", d.mode_count()));
    return detail::finish(
        r, d, [&](const std::string& at, Violations& out) { PulseSpec::check(fwhm, mu, modes, at, out); },
        [&] { return PulseSpec(fwhm, mu, modes); });
  }
};

template <>
struct Codec<DetectorSpec> {
  static Json write(const DetectorSpec& v) {
    return {{"efficiency", v.efficiency()}, {"dark_count_prob", v.dark_count_prob()}};
  }
  static DetectorSpec read(JsonReader& r, const DetectorSpec& d) {
    const double eff = r.number("efficiency", d.efficiency());
    const double dark = r.number("dark_count_prob", d.dark_count_prob());
    return detail::finish(
        r, d, [&](const std::string& at, Violations& out) { DetectorSpec::check(eff, dark, at, out); },
        [&] { return DetectorSpec(eff, dark); });
  }
};

template <>
struct Codec<SplitterSpec> {
  static Json write(const SplitterSpec& v) {
    return {{"t_amp", v.t_amp()}, {"r_amp", v.r_amp()}};
  }
  static SplitterSpec read(JsonReader& r, const SplitterSpec& d) {
    const double t = r.number("t_amp", d.t_amp());
    const double rr = r.number("r_amp", d.r_amp());
    return detail::finish(
        r, d, [&](const std::string& at, Violations& out) { SplitterSpec::check(t, rr, at, out); },
        [&] { return SplitterSpec(t, rr); });
  }
};

template <>
struct Codec<HomSetup> {
  static Json write(const HomSetup& v) {
    return {{"mu_a", v.mu_a()},
            {"mu_b", v.mu_b()},
            {"det_c", Codec<DetectorSpec>::write(v.det_c())},
            {"det_d", Codec<DetectorSpec>::write(v.det_d())},
            {"splitter", Codec<SplitterSpec>::write(v.splitter())},
            {"pol_mismatch", v.pol_mismatch()},
            {"temporal_overlap", v.temporal_overlap()}};
  }
  static HomSetup read(JsonReader& r, const HomSetup& d) {
    const double mu_a = r.number("mu_a", d.mu_a());
    const double mu_b = r.number("mu_b", d.mu_b());
    const auto det_c = r.object("det_c", d.det_c());
    const auto det_d = r.object("det_d", d.det_d());
    const auto split = r.object("splitter", d.splitter());
    const double phi = r.number("pol_mismatch", d.pol_mismatch());
    const double xi = r.number("temporal_overlap", d.temporal_overlap());
    return detail::finish(
        r, d,
        [&](const std::string& at, Violations& out) { HomSetup::check(mu_a, mu_b, phi, xi, at, out); },
        [&] { return HomSetup(mu_a, mu_b, det_c, det_d, split, phi, xi); });
  }
};

template <>
struct Codec<AfcModeSpec> {
  static Json write(const AfcModeSpec& v) {
    return {{"center_offset", v.center_offset()},
            {"comb_spacing", v.comb_spacing()},
            {"bandwidth", v.bandwidth()},
            {"echo_efficiency", v.echo_efficiency()}};
  }
  static AfcModeSpec read(JsonReader& r, const AfcModeSpec& d) {
    const double c = r.number("center_offset", d.center_offset());
    const double s = r.number("comb_spacing", d.comb_spacing());
    const double b = r.number("bandwidth", d.bandwidth());
    const double e = r.number("echo_efficiency", d.echo_efficiency());
    return detail::finish(
        r, d, [&](const std::string& at, Violations& out) { AfcModeSpec::check(c, s, b, e, at, out); },
        [&] { return AfcModeSpec(c, s, b, e); });
  }
};

template <>
struct Codec<AfcBank> {
  static Json write(const AfcBank& v) {
    Json modes = Json::array();
    for (const auto& m : v.modes()) modes.push_back(Codec<AfcModeSpec>::write(m));
    return {{"modes", modes}, {"mode_spacing", v.mode_spacing()}};
  }
  static AfcBank read(JsonReader& r, const AfcBank& d) {
    const auto before = r.violations().size();
    const auto modes = r.array<AfcModeSpec>("modes", d.modes());
    const double spacing = r.number("mode_spacing", d.mode_spacing());
    // Element errors already name their path; skip bank-level checks on
    // placeholder modes.
    if (r.violations().size() != before) return d;
    return detail::finish(
        r, d, [&](const std::string& at, Violations& out) { AfcBank::check(modes, spacing, at, out); },
        [&] { return AfcBank(modes, spacing); });
  }
};

template <>
struct Codec<EchoEvent> {
  static Json write(const EchoEvent& v) {
    return {{"mode_index", v.mode_index()},
            {"retrieval_time", v.retrieval_time()},
            {"envelope_fwhm", v.envelope_fwhm()},
            {"relative_intensity", v.relative_intensity()}};
  }
  static EchoEvent read(JsonReader& r, const EchoEvent& d) {
    const int idx = detail::to_int(r.integer("mode_index", d.mode_index()));
    const double t = r.number("retrieval_time", d.retrieval_time());
    const double f = r.number("envelope_fwhm", d.envelope_fwhm());
    const double i = r.number("relative_intensity", d.relative_intensity());
    return detail::finish(
        r, d, [&](const std::string& at, Violations& out) { EchoEvent::check(idx, t, f, i, at, out); },
        [&] { return EchoEvent(idx, t, f, i); });
  }
};

template <>
struct Codec<LinkParams> {
  static Json write(const LinkParams& v) {
    return {{"p_arrival", v.p_arrival()},
            {"n_modes", v.n_modes()},
            {"eta_two_photon", v.eta_two_photon()},
            {"eta_one_photon", v.eta_one_photon()}};
  }
  static LinkParams read(JsonReader& r, const LinkParams& d) {
    const double p = r.number("p_arrival", d.p_arrival());
    const int n = detail::to_int(r.integer("n_modes", d.n_modes()));
    const double e2 = r.number("eta_two_photon", d.eta_two_photon());
    const double e1 = r.number("eta_one_photon", d.eta_one_photon());
    return detail::finish(
        r, d, [&](const std::string& at, Violations& out) { LinkParams::check(p, n, e2, e1, at, out); },
        [&] { return LinkParams(p, n, e2, e1); });
  }
};

template <>
struct Codec<RateParams> {
  static Json write(const RateParams& v) {
    return {{"n_modes", v.n_modes()},
            {"t_afc", v.t_afc()},
            {"eta_afc", v.eta_afc()},
            {"l_fiber", v.l_fiber()},
            {"r_wc", v.r_wc()}};
  }
  static RateParams read(JsonReader& r, const RateParams& d) {
    const int n = detail::to_int(r.integer("n_modes", d.n_modes()));
    const double t = r.number("t_afc", d.t_afc());
    const double e = r.number("eta_afc", d.eta_afc());
    const double l = r.number("l_fiber", d.l_fiber());
    const double w = r.number("r_wc", d.r_wc());
    return detail::finish(
        r, d, [&](const std::string& at, Violations& out) { RateParams::check(n, t, e, l, w, at, out); },
        [&] { return RateParams(n, t, e, l, w); });
  }
};

template <>
struct Codec<HistogramBin> {
  static Json write(const HistogramBin& v) {
    return {{"bin_start", v.bin_start}, {"count", v.count}};
  }
  static HistogramBin read(JsonReader& r, const HistogramBin& d) {
    return {r.number("bin_start", d.bin_start), r.integer("count", d.count)};
  }
};

template <>
struct Codec<CoincidenceHistogram> {
  static Json write(const CoincidenceHistogram& v) {
    Json bins = Json::array();
    for (const auto& b : v.bins()) bins.push_back(Codec<HistogramBin>::write(b));
    return {{"bin_width", v.bin_width()}, {"bins", bins}, {"delay_setting", v.delay_setting()}};
  }
  static CoincidenceHistogram read(JsonReader& r, const CoincidenceHistogram& d) {
    const double w = r.number("bin_width", d.bin_width());
    const auto bins = r.array<HistogramBin>("bins", d.bins());
    const double tau = r.number("delay_setting", d.delay_setting());
    return detail::finish(
        r, d,
        [&](const std::string& at, Violations& out) { CoincidenceHistogram::check(w, bins, tau, at, out); },
        [&] { return CoincidenceHistogram(w, bins, tau); });
  }
};

template <>
struct Codec<DipPoint> {
  static Json write(const DipPoint& v) {
    return {{"delay", v.delay},
            {"normalized_coincidence", v.normalized_coincidence},
            {"std_error", v.std_error}};
  }
  static DipPoint read(JsonReader& r, const DipPoint& d) {
    return {r.number("delay", d.delay), r.number("normalized_coincidence", d.normalized_coincidence),
            r.number("std_error", d.std_error)};
  }
};

template <>
struct Codec<DipCurve> {
  static Json write(const DipCurve& v) {
    Json pts = Json::array();
    for (const auto& p : v.points()) pts.push_back(Codec<DipPoint>::write(p));
    return {{"points", pts}};
  }
  static DipCurve read(JsonReader& r, const DipCurve& d) {
    const auto pts = r.array<DipPoint>("points", d.points());
    return detail::finish(
        r, d, [&](const std::string& at, Violations& out) { DipCurve::check(pts, at, out); },
        [&] { return DipCurve(pts); });
  }
};

template <>
struct Codec<DipFitResult> {
  static Json write(const DipFitResult& v) {
    return {{"baseline", v.baseline()},
            {"visibility", v.visibility()},
            {"sigma", v.sigma()},
            {"residual_norm", v.residual_norm()}};
  }
  static DipFitResult read(JsonReader& r, const DipFitResult& d) {
    const double b = r.number("baseline", d.baseline());
    const double v = r.number("visibility", d.visibility());
    const double s = r.number("sigma", d.sigma());
    const double n = r.number("residual_norm", d.residual_norm());
    return detail::finish(
        r, d, [&](const std::string& at, Violations& out) { DipFitResult::check(b, v, s, n, at, out); },
        [&] { return DipFitResult(b, v, s, n); });
  }
};

template <class T>
Json to_json_value(const T& value) {
  return Codec<T>::write(value);
}

/// Decodes and validates; throws ValidationError naming every violated rule.
template <class T>
T validate(const Json& node, const T& defaults = T{}) {
  Violations violations;
  JsonReader reader(node, "", violations);
  T value = Codec<T>::read(reader, defaults);
  detail::throw_if(violations);
  return value;
}

}  // namespace fmhom

namespace nlohmann {

// Lets the value types participate in `Json j = value;` and `j.get<T>()`.
template <class T>
  requires requires(const T& v) { fmhom::Codec<T>::write(v); }
struct adl_serializer<T> {
  static void to_json(json& j, const T& value) { j = fmhom::Codec<T>::write(value); }
  static T from_json(const json& j) { return fmhom::validate<T>(j); }
};

}  // namespace nlohmann
