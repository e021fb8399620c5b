#include "eden/loss.hpp"

#include <cmath>
#include <stdexcept>

#include "eden/survival.hpp"

namespace eden::loss {

namespace {
using num::Matrix;

constexpr double kLo = survival::kHazardClampLo;
constexpr double kHi = survival::kHazardClampHi;

double clamp01(double x) { return x < kLo ? kLo : (x > kHi ? kHi : x); }
}  // namespace

PatientTargets build_targets(const data::PatientRecord& rec, int n_events) {
  PatientTargets t;
  const size_t N = rec.visits.size();
  std::vector<long> days(N);
  for (size_t j = 0; j < N; ++j) days[j] = rec.visits[j].tau;
  t.w.assign(N, std::vector<double>(n_events, 0.0));
  t.observed.assign(n_events, false);
  t.mu.assign(n_events, -1);
  for (int s = 0; s < n_events; ++s) {
    const auto& lab = rec.labels[s];
    t.observed[s] = lab.observed;
    if (!lab.observed) continue;
    const std::vector<double> col = survival::target_event_rate(true, lab.time, days);
    for (size_t j = 0; j < N; ++j) {
      t.w[j][s] = col[j];
      if (col[j] == 1.0 && t.mu[s] < 0) t.mu[s] = static_cast<int>(j);
    }
  }
  return t;
}

std::pair<double, double> compute_betas(const data::Cohort& training) {
  long ones = 0, zeros = 0;
  const int S = training.n_events();
  for (const auto& p : training.patients) {
    const PatientTargets t = build_targets(p, S);
    for (const auto& row : t.w)
      for (double x : row) (x == 1.0 ? ones : zeros) += 1;
  }
  if (ones == 0) throw std::runtime_error("compute_betas: targets contain no 1 cells");
  if (zeros == 0) throw std::runtime_error("compute_betas: targets contain no 0 cells");
  const double total = static_cast<double>(ones + zeros);
  const double beta1_raw = total / static_cast<double>(ones);
  const double beta0_raw = total / static_cast<double>(zeros);
  return {beta0_raw / (beta0_raw + beta1_raw), beta1_raw / (beta0_raw + beta1_raw)};
}

double l1_weighted_bce(const std::vector<std::vector<std::vector<double>>>& rates,
                       const std::vector<PatientTargets>& targets, double beta0, double beta1) {
  const size_t B = rates.size();
  double acc = 0.0;
  for (size_t i = 0; i < B; ++i) {
    const auto& seq = rates[i];
    const auto& t = targets[i];
    const size_t N = seq.size();
    const size_t S = t.observed.size();
    double patient = 0.0;
    for (size_t k = 0; k < N; ++k)
      for (size_t s = 0; s < S; ++s) {
        const double w = t.w[k][s];
        const double wp = clamp01(seq[k][s]);
        patient += beta1 * w * std::log(wp) + beta0 * (1.0 - w) * std::log(1.0 - wp);
      }
    acc += -patient / static_cast<double>(N * S);
  }
  return acc / static_cast<double>(B);
}

double l2_event_hit(const std::vector<std::vector<std::vector<double>>>& rates,
                    const std::vector<PatientTargets>& targets) {
  double acc = 0.0;
  long count = 0;
  for (size_t i = 0; i < rates.size(); ++i) {
    const auto& t = targets[i];
    for (size_t s = 0; s < t.observed.size(); ++s) {
      if (!t.observed[s]) continue;
      ++count;
      const double w = rates[i][t.mu[s]][s];
      acc += (1.0 - w) * (1.0 - w);
    }
  }
  return count == 0 ? 0.0 : acc / static_cast<double>(count);
}

double l3_pre_event_zero(const std::vector<std::vector<std::vector<double>>>& rates,
                         const std::vector<PatientTargets>& targets) {
  double acc = 0.0;
  long count = 0;
  for (size_t i = 0; i < rates.size(); ++i) {
    const auto& t = targets[i];
    for (size_t s = 0; s < t.observed.size(); ++s) {
      if (!t.observed[s]) continue;
      ++count;  // mu == 0 contributes 0 but stays in the mean (W(tau_0) := 0)
      if (t.mu[s] > 0) {
        const double w = rates[i][t.mu[s] - 1][s];
        acc += w * w;
      }
    }
  }
  return count == 0 ? 0.0 : acc / static_cast<double>(count);
}

double l4_censored_zero(const std::vector<std::vector<std::vector<double>>>& rates,
                        const std::vector<PatientTargets>& targets) {
  double acc = 0.0;
  long count = 0;
  for (size_t i = 0; i < rates.size(); ++i) {
    const auto& t = targets[i];
    for (size_t s = 0; s < t.observed.size(); ++s) {
      if (t.observed[s]) continue;
      ++count;
      const double w = rates[i].back()[s];
      acc += w * w;
    }
  }
  return count == 0 ? 0.0 : acc / static_cast<double>(count);
}

double total_loss(const std::vector<std::vector<std::vector<double>>>& rates,
                  const std::vector<PatientTargets>& targets, const LossWeights& w, bool use_l2,
                  bool use_l3, bool use_l4) {
  double total = w.alpha1 * l1_weighted_bce(rates, targets, w.beta0, w.beta1);
  if (use_l2) total += w.alpha2 * l2_event_hit(rates, targets);
  if (use_l3) total += w.alpha3 * l3_pre_event_zero(rates, targets);
  if (use_l4) total += w.alpha4 * l4_censored_zero(rates, targets);
  return total;
}

TapedLoss build_taped_loss(Tape& tape, const std::vector<std::vector<Tape::Id>>& outputs,
                           const std::vector<PatientTargets>& targets, const LossWeights& w,
                           bool use_l2, bool use_l3, bool use_l4) {
  if (outputs.size() != targets.size())
    throw std::invalid_argument("build_taped_loss: batch size mismatch");
  const size_t B = outputs.size();
  const Tape::Id zero = tape.input(Matrix::zeros(1, 1), false);

  // L1: weighted BCE with the target indicators folded into constant vectors
  Tape::Id l1 = zero;
  for (size_t i = 0; i < B; ++i) {
    const auto& seq = outputs[i];
    const auto& t = targets[i];
    const size_t N = seq.size();
    const int S = static_cast<int>(t.observed.size());
    Tape::Id patient = zero;
    for (size_t k = 0; k < N; ++k) {
      Matrix a(S, 1), b(S, 1);
      for (int s = 0; s < S; ++s) {
        a.v[s] = w.beta1 * t.w[k][s];
        b.v[s] = w.beta0 * (1.0 - t.w[k][s]);
      }
      const Tape::Id wc = tape.clamp(seq[k], kLo, kHi);
      const Tape::Id pos = tape.mul(tape.input(std::move(a), false), tape.log(wc));
      const Tape::Id neg =
          tape.mul(tape.input(std::move(b), false), tape.log(tape.rsub_const(1.0, wc)));
      patient = tape.add(patient, tape.sum(tape.add(pos, neg)));
    }
    l1 = tape.add(l1, tape.scale(patient, -1.0 / static_cast<double>(N * S)));
  }
  l1 = tape.scale(l1, 1.0 / static_cast<double>(B));

  // L2 / L3 / L4: quadratic pinning terms at the event, pre-event and
  // end-of-sequence visits
  Tape::Id l2 = zero, l3 = zero, l4 = zero;
  long n_observed = 0, n_censored = 0;
  for (size_t i = 0; i < B; ++i) {
    const auto& seq = outputs[i];
    const auto& t = targets[i];
    for (size_t s = 0; s < t.observed.size(); ++s) {
      if (t.observed[s]) {
        ++n_observed;
        const Tape::Id at_mu = tape.entry(seq[t.mu[s]], static_cast<int>(s), 0);
        const Tape::Id miss = tape.rsub_const(1.0, at_mu);
        l2 = tape.add(l2, tape.mul(miss, miss));
        if (t.mu[s] > 0) {
          const Tape::Id before = tape.entry(seq[t.mu[s] - 1], static_cast<int>(s), 0);
          l3 = tape.add(l3, tape.mul(before, before));
        }
      } else {
        ++n_censored;
        const Tape::Id last = tape.entry(seq.back(), static_cast<int>(s), 0);
        l4 = tape.add(l4, tape.mul(last, last));
      }
    }
  }
  if (n_observed > 0) {
    l2 = tape.scale(l2, 1.0 / static_cast<double>(n_observed));
    l3 = tape.scale(l3, 1.0 / static_cast<double>(n_observed));
  }
  if (n_censored > 0) l4 = tape.scale(l4, 1.0 / static_cast<double>(n_censored));

  TapedLoss out;
  out.l1 = l1;
  out.l2 = l2;
  out.l3 = l3;
  out.l4 = l4;
  Tape::Id total = tape.scale(l1, w.alpha1);
  if (use_l2) total = tape.add(total, tape.scale(l2, w.alpha2));
  if (use_l3) total = tape.add(total, tape.scale(l3, w.alpha3));
  if (use_l4) total = tape.add(total, tape.scale(l4, w.alpha4));
  out.total = total;
  return out;
}

}  // namespace eden::loss
