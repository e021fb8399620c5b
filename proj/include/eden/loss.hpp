#pragma once

#include <vector>

#include "eden/records.hpp"
#include "eden/tape.hpp"

namespace eden::loss {

using num::Tape;

struct LossWeights {
  double alpha1 = 10.0, alpha2 = 1.0, alpha3 = 1.0, alpha4 = 1.0;
  double beta0 = 0.5, beta1 = 0.5;  // class-balance weights, beta0 + beta1 = 1
};

/// Per-patient ground truth for the loss terms.
struct PatientTargets {
  std::vector<std::vector<double>> w;  // N visits x S types, entries in {0,1}
  std::vector<bool> observed;          // Y per type
  std::vector<int> mu;                 // 0-based event visit index per type; -1 when censored
};

PatientTargets build_targets(const data::PatientRecord& rec, int n_events);

/// Balancing weights from the over-representation of 0 cells over 1 cells in
/// the target event-rate functions of the whole training set. Throws when
/// the targets are all-zero or all-one.
std::pair<double, double> compute_betas(const data::Cohort& training);  // (beta0, beta1)

// Plain (untaped) loss components over a batch; `rates[i]` holds patient i's
// predicted sequence as N_i x S rows. Used for reporting and as the
// independent oracle against the taped path.
double l1_weighted_bce(const std::vector<std::vector<std::vector<double>>>& rates,
                       const std::vector<PatientTargets>& targets, double beta0, double beta1);
double l2_event_hit(const std::vector<std::vector<std::vector<double>>>& rates,
                    const std::vector<PatientTargets>& targets);
double l3_pre_event_zero(const std::vector<std::vector<std::vector<double>>>& rates,
                         const std::vector<PatientTargets>& targets);
double l4_censored_zero(const std::vector<std::vector<std::vector<double>>>& rates,
                        const std::vector<PatientTargets>& targets);
double total_loss(const std::vector<std::vector<std::vector<double>>>& rates,
                  const std::vector<PatientTargets>& targets, const LossWeights& w,
                  bool use_l2 = true, bool use_l3 = true, bool use_l4 = true);

struct TapedLoss {
  Tape::Id total;
  Tape::Id l1, l2, l3, l4;  // unweighted component values
};

/// Loss graph over a batch. `outputs[i]` are patient i's per-visit S x 1
/// output nodes (event rates, or raw head outputs for non-survival models).
TapedLoss build_taped_loss(Tape& tape, const std::vector<std::vector<Tape::Id>>& outputs,
                           const std::vector<PatientTargets>& targets, const LossWeights& w,
                           bool use_l2 = true, bool use_l3 = true, bool use_l4 = true);

}  // namespace eden::loss
