#include "eden/survival.hpp"

#include <stdexcept>
#include <string>

namespace eden::survival {

std::vector<double> chain_rule(const std::vector<double>& hazards) {
  std::vector<double> w;
  w.reserve(hazards.size());
  double survival = 1.0;
  for (double h : hazards) {
    if (!(h >= 0.0 && h <= kHazardClampHi))
      throw std::invalid_argument("chain_rule: hazard outside [0, 1-1e-12]: " + std::to_string(h));
    survival *= 1.0 - h;
    w.push_back(1.0 - survival);
  }
  return w;
}

std::vector<double> hazards_from_event_rate(const std::vector<double>& w) {
  std::vector<double> h;
  h.reserve(w.size());
  double prev = 0.0;
  for (double wr : w) {
    h.push_back((wr - prev) / (1.0 - prev));
    prev = wr;
  }
  return h;
}

Prediction extract_prediction(const std::vector<double>& w, const std::vector<long>& visit_days,
                              double threshold) {
  if (w.empty()) throw std::invalid_argument("extract_prediction: empty sequence");
  if (w.size() != visit_days.size())
    throw std::invalid_argument("extract_prediction: sequence/day length mismatch");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("extract_prediction: threshold must lie in (0, 1)");
  Prediction p;
  for (double x : w) p.score = x > p.score ? x : p.score;
  p.decision = p.score > threshold;
  if (p.decision) {
    for (size_t r = 0; r < w.size(); ++r) {
      if (w[r] >= threshold) {
        p.time = visit_days[r];
        break;
      }
    }
  }
  return p;
}

std::vector<double> target_event_rate(bool observed, long event_time,
                                      const std::vector<long>& visit_days) {
  std::vector<double> w(visit_days.size(), 0.0);
  if (!observed) return w;
  bool hit = false;
  for (size_t r = 0; r < visit_days.size(); ++r) {
    if (visit_days[r] >= event_time) {
      w[r] = 1.0;
      hit = hit || visit_days[r] == event_time;
    }
  }
  if (!hit) throw std::invalid_argument("target_event_rate: event time matches no visit");
  return w;
}

}  // namespace eden::survival
