#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eden/records.hpp"

namespace eden::metrics {

/// Rank-based (Mann-Whitney) AUC with ties counted 0.5. Empty when only one
/// class is present.
std::optional<double> auc(const std::vector<double>& scores, const std::vector<bool>& truths);

/// (F1, accuracy); F1 is 0 on 0/0.
std::pair<double, double> f1_acc(const std::vector<bool>& decisions,
                                 const std::vector<bool>& truths);

/// Mean of (predicted - true) event day over true positives (signed days);
/// empty when there are none.
std::optional<double> delta_t(const std::vector<bool>& decisions,
                              const std::vector<long>& predicted_days,
                              const std::vector<bool>& truths,
                              const std::vector<long>& true_days);

/// Right-continuous step function on the visit grid; 0 before the first day.
struct StepFunction {
  std::vector<long> days;
  std::vector<double> values;
  double at(double t) const;
};

/// Integrated Brier score with inverse-probability-of-censoring weights from
/// a Kaplan-Meier estimate of the censoring distribution, averaged over
/// patients, trapezoid-integrated over `grid` and normalized by its span.
/// If the censoring estimate hits zero before the grid end, the grid is
/// truncated and `*truncated_at` (when non-null) receives the cut point.
double integrated_brier(const std::vector<StepFunction>& predicted, const std::vector<bool>& observed,
                        const std::vector<long>& times, const std::vector<double>& grid,
                        double* truncated_at = nullptr);

struct Concordance {
  double concordant_fraction = 0.0;  // ties counted 0.5
  double error = 0.0;                // 1 - concordant_fraction
  long comparable_pairs = 0;
};

/// Time-dependent concordance over comparable pairs (i observed and
/// T_i < T_j), with risk taken as the predicted score. Empty when no pair is
/// comparable.
std::optional<Concordance> concordance_error(const std::vector<double>& scores,
                                             const std::vector<bool>& observed,
                                             const std::vector<long>& times);

struct KMCurve {
  std::vector<double> times;     // step times, starting at 0
  std::vector<double> survival;  // starts at 1, non-increasing
};

/// Product-limit estimator; censored observations shrink the risk set
/// without stepping the curve. While no censoring has occurred the
/// telescoped exact ratio is used, so the no-censoring curve equals the
/// empirical survival function exactly.
KMCurve kaplan_meier(const std::vector<bool>& observed, const std::vector<long>& times);

struct EventTypeMetrics {
  std::optional<double> auc;
  double accuracy = 0.0;
  double f1 = 0.0;
  std::optional<double> delta_t_days;
  double brier = 0.0;
  std::optional<double> c_error;
  std::optional<double> concordance;  // raw concordant fraction, also logged
  double threshold = 0.5;
};

struct MetricsReport {
  std::vector<std::string> event_names;
  std::vector<EventTypeMetrics> per_type;
};

/// Per-patient predictions for one event type, aligned with the cohort.
struct TypedPredictions {
  std::vector<double> scores;
  std::vector<bool> decisions;
  std::vector<long> predicted_day;  // meaningful where decisions[i]
};

MetricsReport build_report(const data::Cohort& cohort,
                           const std::vector<TypedPredictions>& per_type,
                           const std::vector<std::vector<StepFunction>>& rate_steps,
                           const std::vector<double>& thresholds);

/// Mean gap W(tau_{r+1}) - W(tau_{r-1}) across interior visits carrying each
/// code, per event type. Codes never seen at an interior visit are absent.
struct CodeImpact {
  int code = 0;
  double mean_gap = 0.0;
  long count = 0;
};
std::vector<std::vector<CodeImpact>> code_impact(
    const data::Cohort& cohort, const std::vector<std::vector<StepFunction>>& rate_steps);

/// Top-k rows per event type, by mean gap descending, ties alphabetical.
std::vector<std::vector<CodeImpact>> top_code_impacts(
    const std::vector<std::vector<CodeImpact>>& impacts, int k);

// ---- CSV emission (shared by the CLI and the tests) ------------------------

std::string metrics_csv(const std::string& model, const std::string& cohort_name,
                        const MetricsReport& report);
std::string metrics_csv_header();
std::string km_csv(const data::Cohort& cohort, const std::vector<TypedPredictions>& per_type);
std::string predictions_csv(const data::Cohort& cohort,
                            const std::vector<TypedPredictions>& per_type);
std::string code_impact_csv(const std::vector<std::vector<CodeImpact>>& impacts,
                            const std::vector<std::string>& event_names);

}  // namespace eden::metrics
