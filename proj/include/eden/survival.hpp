#pragma once

#include <optional>
#include <vector>

namespace eden::survival {

inline constexpr double kHazardClampLo = 1e-12;
inline constexpr double kHazardClampHi = 1.0 - 1e-12;

/// Cumulative event rate from per-visit hazards via the running product
///   W(tau_r) = 1 - prod_{k<=r} (1 - h(tau_k)).
/// Input entries must lie in [0, 1-1e-12]; output is non-decreasing in [0,1).
std::vector<double> chain_rule(const std::vector<double>& hazards);

/// Inverse of chain_rule: h(tau_r) = (W_r - W_{r-1}) / (1 - W_{r-1}).
std::vector<double> hazards_from_event_rate(const std::vector<double>& w);

struct Prediction {
  double score = 0.0;              // max_r W(tau_r)
  bool decision = false;           // score > threshold
  std::optional<long> time;        // first visit day with W >= threshold; set iff decision
};

/// Thresholded readout of an event-rate sequence. For monotone sequences the
/// score equals the last value; the max is taken so non-survival outputs
/// (raw per-visit probabilities) read out through the same path.
Prediction extract_prediction(const std::vector<double>& w, const std::vector<long>& visit_days,
                              double threshold);

/// Ground-truth event rate: all zeros when censored, else the 0->1 step at
/// the visit matching `event_time` (which must be a visit day).
std::vector<double> target_event_rate(bool observed, long event_time,
                                      const std::vector<long>& visit_days);

}  // namespace eden::survival
