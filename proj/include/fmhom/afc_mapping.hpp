#pragma once

// Frequency-to-time mode mapping by atomic frequency combs. A comb with
// tooth spacing Delta re-emits its input as an echo after 1/Delta, so a bank
// of combs with distinct spacings maps frequency modes onto distinct
// retrieval times.
//
// Delay convention for a pair of banks: tau is the delay of channel 1
// relative to channel 2, i.e. bank 2's schedule is advanced by tau. With
// this convention tau = -380 ns brings bank-1 mode 2 next to bank-2 mode 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <vector>

#include "fmhom/csv.hpp"
#include "fmhom/errors.hpp"
#include "fmhom/model.hpp"

namespace fmhom {

using Matrix = std::vector<std::vector<double>>;

/// 1/Delta in ns for a comb spacing in MHz.
inline double storage_time(double comb_spacing_mhz) {
  if (!(comb_spacing_mhz > 0.0) || !std::isfinite(comb_spacing_mhz)) {
    throw DomainError("storage_time: comb spacing must be > 0");
  }
  return 1e3 / comb_spacing_mhz;
}

/// Echoes of one bank, sorted by retrieval time (ties keep bank order).
inline std::vector<EchoEvent> echo_schedule(const AfcBank& bank, double input_time,
                                            double channel_delay,
                                            double envelope_fwhm = kDefaultPulseFwhmNs) {
  std::vector<EchoEvent> events;
  events.reserve(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const auto& mode = bank.modes()[i];
    events.emplace_back(static_cast<int>(i) + 1,
                        input_time + channel_delay + storage_time(mode.comb_spacing()),
                        envelope_fwhm, mode.echo_efficiency());
  }
  std::stable_sort(events.begin(), events.end(), [](const EchoEvent& a, const EchoEvent& b) {
    return a.retrieval_time() < b.retrieval_time();
  });
  return events;
}

/// Overlap of two Gaussian echo envelopes (intensity FWHM `fwhm`) whose
/// centers are `dt` apart: exp(-dt^2 / (4 sigma_t^2)). This is the squared
/// amplitude overlap |<psi_1|psi_2>|^2, the weight with which the pair can
/// interfere.
inline double envelope_overlap(double dt, double envelope_fwhm) {
  if (!(envelope_fwhm > 0.0)) throw DomainError("envelope_overlap: envelope FWHM must be > 0");
  const double sigma_t = envelope_fwhm * kFwhmToSigma;
  return std::exp(-dt * dt / (4.0 * sigma_t * sigma_t));
}

/// Entry (i, j): overlap of bank-1 mode i with bank-2 mode j (0-based) under
/// relative delay tau.
inline Matrix cross_mode_overlap(const AfcBank& bank1, const AfcBank& bank2, double tau,
                                 double envelope_fwhm) {
  if (!(envelope_fwhm > 0.0)) throw DomainError("cross_mode_overlap: envelope FWHM must be > 0");
  Matrix m(bank1.size(), std::vector<double>(bank2.size()));
  for (std::size_t i = 0; i < bank1.size(); ++i) {
    const double t1 = storage_time(bank1.modes()[i].comb_spacing());
    for (std::size_t j = 0; j < bank2.size(); ++j) {
      const double t2 = storage_time(bank2.modes()[j].comb_spacing()) - tau;
      m[i][j] = envelope_overlap(t1 - t2, envelope_fwhm);
    }
  }
  return m;
}

/// Echo times of one matched mode pair and where their coincidences land.
struct PairPeak {
  int mode_index = 1;  // 1-based
  double time_1 = 0.0;
  double time_2 = 0.0;
  double center() const { return 0.5 * (time_1 + time_2); }
};

/// Matched-mode echo pairs of two equally sized banks under delay tau.
inline std::vector<PairPeak> matched_pair_peaks(const AfcBank& bank1, const AfcBank& bank2,
                                                double tau) {
  if (bank1.size() != bank2.size()) throw ConfigError("banks must have the same number of modes");
  std::vector<PairPeak> peaks;
  for (std::size_t i = 0; i < bank1.size(); ++i) {
    peaks.push_back({static_cast<int>(i) + 1, storage_time(bank1.modes()[i].comb_spacing()),
                     storage_time(bank2.modes()[i].comb_spacing()) - tau});
  }
  return peaks;
}

struct SeparabilityReport {
  bool pass = true;
  bool spectrally_separated = true;
  /// 1-based mode indices of the most overlapping same-bank pair; 0 if the
  /// bank has a single mode.
  int worst_mode_a = 0;
  int worst_mode_b = 0;
  double worst_overlap = 0.0;
};

/// Checks that distinct echoes of one bank do not overlap in time beyond
/// `threshold` and that the combs are spectrally disjoint.
inline SeparabilityReport mode_separability_check(const AfcBank& bank, double envelope_fwhm,
                                                  double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw DomainError("mode_separability_check: threshold must be in (0,1)");
  }
  SeparabilityReport report;
  const auto& modes = bank.modes();
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (!(modes[i].bandwidth() < bank.mode_spacing())) report.spectrally_separated = false;
    for (std::size_t j = i + 1; j < modes.size(); ++j) {
      const double dt = storage_time(modes[i].comb_spacing()) - storage_time(modes[j].comb_spacing());
      const double ov = envelope_overlap(dt, envelope_fwhm);
      if (report.worst_mode_a == 0 || ov > report.worst_overlap) {
        report.worst_overlap = ov;
        report.worst_mode_a = static_cast<int>(i) + 1;
        report.worst_mode_b = static_cast<int>(j) + 1;
      }
    }
  }
  report.pass = report.spectrally_separated && report.worst_overlap < threshold;
  return report;
}

/// CSV columns: mode_index,retrieval_time_ns,relative_intensity.
inline void write_schedule_csv(std::ostream& os, const std::vector<EchoEvent>& events) {
  os << "mode_index,retrieval_time_ns,relative_intensity\n";
  for (const auto& e : events) {
    write_row(os, {std::to_string(e.mode_index()), format_double(e.retrieval_time()),
                   format_double(e.relative_intensity())});
  }
}

}  // namespace fmhom
