#pragma once

// Success probabilities of one frequency-multiplexed repeater node joining
// two elementary links, and the heralding-rate ceiling set by mapping N
// frequency modes onto N retrieval times.
//
// Per link, N modes are tried in parallel. A two-photon (photon pair) BSM
// in one mode succeeds with p^2; a one-photon BSM sees 2N modes and
// succeeds per mode pair with 1-(1-p)^2. Without mode matching both links
// must herald in the same mode, which costs a factor 1/N; with mode matching
// the repeater shifts to whichever mode heralded.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "fmhom/coincidence_mc.hpp"
#include "fmhom/csv.hpp"
#include "fmhom/errors.hpp"
#include "fmhom/model.hpp"
#include "fmhom/parallel.hpp"
#include "fmhom/random.hpp"
#include "fmhom/serialization.hpp"

namespace fmhom {

enum class Scheme { two_photon, one_photon };

inline const char* to_string(Scheme s) { return s == Scheme::two_photon ? "two_photon" : "one_photon"; }

/// Probability that at least one of the link's modes heralds.
inline double single_link_success(double p, int n_modes, bool two_photon) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("single_link_success: p must be in [0,1]");
  if (n_modes < 1) throw DomainError("single_link_success: N must be >= 1");
  // 1 - (1-x)^k = -expm1(k log1p(-x)) stays accurate for tiny p.
  if (two_photon) return -std::expm1(n_modes * std::log1p(-p * p));
  return -std::expm1(2.0 * n_modes * std::log1p(-p));
}

inline double p_two_photon(const LinkParams& params, bool matched, bool exact) {
  const double n = params.n_modes();
  const double p = params.p_arrival();
  const double eta = params.eta_two_photon();
  if (!exact) return eta * (matched ? n * n : n) * std::pow(p, 4);
  const double link = single_link_success(p, params.n_modes(), true);
  return eta * link * link / (matched ? 1.0 : n);
}

inline double p_one_photon(const LinkParams& params, bool matched, bool exact) {
  const double n = params.n_modes();
  const double p = params.p_arrival();
  const double eta = params.eta_one_photon();
  if (!exact) return eta * 4.0 * (matched ? n * n : n) * p * p;
  const double link = single_link_success(p, params.n_modes(), false);
  return eta * link * link / (matched ? 1.0 : n);
}

inline double p_success(const LinkParams& params, Scheme scheme, bool matched, bool exact) {
  return scheme == Scheme::two_photon ? p_two_photon(params, matched, exact)
                                      : p_one_photon(params, matched, exact);
}

/// Upper bound on the heralding rate in counts/s (t_afc in µs).
inline double r_limit(const RateParams& params, bool two_photon) {
  const double per_second = params.n_modes() / (params.t_afc() * 1e-6);
  const double channel = params.eta_afc() * params.l_fiber() * params.r_wc();
  return per_second * (two_photon ? channel * channel : channel);
}

class LinkMcResult {
 public:
  LinkMcResult() = default;
  LinkMcResult(std::uint64_t trials, std::uint64_t successes) : trials_(trials), successes_(successes) {
    Violations v;
    check(trials, successes, "", v);
    detail::throw_if(v);
    p_hat_ = static_cast<double>(successes) / static_cast<double>(trials);
    std_error_ = binomial_std_error(p_hat_, trials);
  }

  static void check(std::uint64_t trials, std::uint64_t successes, const std::string& at,
                    Violations& out) {
    detail::require(trials >= 1, at, "trials", "must be >= 1", out);
    detail::require(successes <= trials, at, "successes", "must be <= trials", out);
  }

  std::uint64_t trials() const { return trials_; }
  std::uint64_t successes() const { return successes_; }
  double p_hat() const { return p_hat_; }
  double std_error() const { return std_error_; }

  friend bool operator==(const LinkMcResult&, const LinkMcResult&) = default;

 private:
  std::uint64_t trials_ = 1;
  std::uint64_t successes_ = 0;
  double p_hat_ = 0.0;
  double std_error_ = 0.0;
};

template <>
struct Codec<LinkMcResult> {
  static Json write(const LinkMcResult& v) {
    return {{"trials", v.trials()},
            {"successes", v.successes()},
            {"p_hat", v.p_hat()},
            {"std_error", v.std_error()}};
  }
  static LinkMcResult read(JsonReader& r, const LinkMcResult& d) {
    const auto n = r.unsigned_integer("trials", d.trials());
    const auto k = r.unsigned_integer("successes", d.successes());
    return detail::finish(
        r, d, [&](const std::string& at, Violations& out) { LinkMcResult::check(n, k, at, out); },
        [&] { return LinkMcResult(n, k); });
  }
};

namespace detail {

struct SuccessCount {
  std::uint64_t successes = 0;
  SuccessCount& operator+=(const SuccessCount& o) {
    successes += o.successes;
    return *this;
  }
};

inline constexpr std::uint32_t kLinkStream = 4;

// Uniformly chosen heralded mode of one link, or -1 when none heralded.
inline int herald_one_link(TrialRng& rng, int n_modes, double q, std::vector<int>& scratch) {
  scratch.clear();
  for (int m = 0; m < n_modes; ++m) {
    if (rng.bernoulli(q)) scratch.push_back(m);
  }
  if (scratch.empty()) return -1;
  const auto pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(scratch.size()));
  return scratch[std::min(pick, scratch.size() - 1)];
}

}  // namespace detail

/// Per trial: every mode of each link heralds independently with q
/// (p^2 for two-photon, 1-(1-p)^2 for one-photon). Unmatched operation picks
/// one heralded mode per link uniformly at random and succeeds only if both
/// picks agree; matched operation succeeds whenever both links heralded. The
/// eta factor is applied last as a Bernoulli thinning.
inline LinkMcResult simulate_link_mc(const LinkParams& params, bool matched, bool two_photon,
                                     std::uint64_t trials, std::uint64_t seed, unsigned threads = 0) {
  if (trials < 1) throw DomainError("simulate_link_mc: trials must be >= 1");
  const double eta = two_photon ? params.eta_two_photon() : params.eta_one_photon();
  if (eta > 1.0) throw DomainError("simulate_link_mc: eta above 1 is not a probability");
  const double p = params.p_arrival();
  const double q = two_photon ? p * p : 1.0 - (1.0 - p) * (1.0 - p);
  const int n = params.n_modes();

  const auto count = parallel_accumulate<detail::SuccessCount>(
      trials,
      [&](std::uint64_t begin, std::uint64_t end) {
        detail::SuccessCount local;
        std::vector<int> scratch;
        scratch.reserve(static_cast<std::size_t>(n));
        for (std::uint64_t i = begin; i < end; ++i) {
          TrialRng rng(seed, i, detail::kLinkStream);
          const int left = detail::herald_one_link(rng, n, q, scratch);
          const int right = detail::herald_one_link(rng, n, q, scratch);
          const bool joined = left >= 0 && right >= 0 && (matched || left == right);
          if (joined && rng.bernoulli(eta)) ++local.successes;
        }
        return local;
      },
      threads);
  return {trials, count.successes};
}

/// Long-format rate table, columns: quantity,N,p,matched,exact,probability.
/// quantity is two_photon, one_photon (probabilities) or r_limit_two_photon,
/// r_limit_one_photon (counts/s; p, matched and exact left empty).
inline void write_rate_table_csv(std::ostream& os, const LinkParams& link, const RateParams& rates,
                                 int n_min, int n_max) {
  os << "quantity,N,p,matched,exact,probability\n";
  for (int n = n_min; n <= n_max; ++n) {
    const LinkParams at_n = link.with_modes(n);
    for (Scheme scheme : {Scheme::two_photon, Scheme::one_photon}) {
      for (bool matched : {false, true}) {
        for (bool exact : {true, false}) {
          write_row(os, {to_string(scheme), std::to_string(n), format_double(link.p_arrival()),
                         matched ? "1" : "0", exact ? "1" : "0",
                         format_double(p_success(at_n, scheme, matched, exact))});
        }
      }
    }
    const RateParams r_at_n = rates.with_modes(n);
    write_row(os, {"r_limit_two_photon", std::to_string(n), "", "", "", format_double(r_limit(r_at_n, true))});
    write_row(os, {"r_limit_one_photon", std::to_string(n), "", "", "", format_double(r_limit(r_at_n, false))});
  }
}

}  // namespace fmhom
