#include "eden/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

namespace eden::metrics {

std::optional<double> auc(const std::vector<double>& scores, const std::vector<bool>& truths) {
  if (scores.size() != truths.size()) throw std::invalid_argument("auc: length mismatch");
  const size_t n = scores.size();
  size_t n_pos = 0;
  for (bool t : truths) n_pos += t;
  const size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // average ranks over tie groups, sum positive ranks (Mann-Whitney U)
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (size_t k = i; k < j; ++k)
      if (truths[idx[k]]) rank_sum_pos += avg_rank;
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::pair<double, double> f1_acc(const std::vector<bool>& decisions,
                                 const std::vector<bool>& truths) {
  if (decisions.size() != truths.size()) throw std::invalid_argument("f1_acc: length mismatch");
  long tp = 0, fp = 0, fn = 0, correct = 0;
  for (size_t i = 0; i < truths.size(); ++i) {
    tp += decisions[i] && truths[i];
    fp += decisions[i] && !truths[i];
    fn += !decisions[i] && truths[i];
    correct += decisions[i] == truths[i];
  }
  const double f1 = (2 * tp + fp + fn) == 0 ? 0.0
                                            : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
  const double acc =
      truths.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truths.size());
  return {f1, acc};
}

std::optional<double> delta_t(const std::vector<bool>& decisions,
                              const std::vector<long>& predicted_days,
                              const std::vector<bool>& truths,
                              const std::vector<long>& true_days) {
  double acc = 0.0;
  long n = 0;
  for (size_t i = 0; i < truths.size(); ++i) {
    if (!(truths[i] && decisions[i])) continue;
    acc += static_cast<double>(predicted_days[i] - true_days[i]);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return acc / static_cast<double>(n);
}

double StepFunction::at(double t) const {
  double out = 0.0;
  for (size_t i = 0; i < days.size(); ++i) {
    if (static_cast<double>(days[i]) <= t)
      out = values[i];
    else
      break;
  }
  return out;
}

namespace {

/// Kaplan-Meier estimate of the censoring survival G(t) = P(C > t); the
/// reverse estimator steps at censoring times with risk sets {T >= t}.
struct CensoringKM {
  std::vector<long> step_times;
  std::vector<double> values;  // G right after each step time

  static CensoringKM fit(const std::vector<bool>& observed, const std::vector<long>& times) {
    std::map<long, std::pair<long, long>> at_time;  // time -> (events, censorings)
    for (size_t i = 0; i < times.size(); ++i) {
      auto& e = at_time[times[i]];
      (observed[i] ? e.first : e.second) += 1;
    }
    CensoringKM km;
    double g = 1.0;
    long at_risk = static_cast<long>(times.size());
    for (const auto& [t, counts] : at_time) {
      const auto [d, c] = counts;
      if (c > 0) {
        g *= 1.0 - static_cast<double>(c) / static_cast<double>(at_risk);
        km.step_times.push_back(t);
        km.values.push_back(g);
      }
      at_risk -= d + c;
    }
    return km;
  }

  double at(double t) const {  // G(t), right-continuous
    double g = 1.0;
    for (size_t i = 0; i < step_times.size(); ++i) {
      if (static_cast<double>(step_times[i]) <= t)
        g = values[i];
      else
        break;
    }
    return g;
  }

  double before(double t) const {  // G(t-), left limit
    double g = 1.0;
    for (size_t i = 0; i < step_times.size(); ++i) {
      if (static_cast<double>(step_times[i]) < t)
        g = values[i];
      else
        break;
    }
    return g;
  }
};

}  // namespace

double integrated_brier(const std::vector<StepFunction>& predicted,
                        const std::vector<bool>& observed, const std::vector<long>& times,
                        const std::vector<double>& grid, double* truncated_at) {
  const size_t n = predicted.size();
  if (n == 0 || observed.size() != n || times.size() != n)
    throw std::invalid_argument("integrated_brier: input length mismatch");
  if (grid.size() < 2) throw std::invalid_argument("integrated_brier: grid needs >= 2 points");
  const CensoringKM g = CensoringKM::fit(observed, times);

  std::vector<double> usable_grid;
  for (double t : grid) {
    const bool at_risk_weight_ok = g.at(t) > 0.0;
    // patients with events before t need G(T-) > 0; the earliest relevant
    // left limit is bounded below by G(t-) >= G(t), so checking G(t) covers
    // both weight kinds
    if (!at_risk_weight_ok) break;
    usable_grid.push_back(t);
  }
  if (usable_grid.size() < 2)
    throw std::invalid_argument("integrated_brier: censoring estimate vanishes at grid start");
  if (truncated_at != nullptr)
    *truncated_at = usable_grid.size() == grid.size() ? -1.0 : usable_grid.back();

  std::vector<double> bs(usable_grid.size(), 0.0);
  for (size_t gi = 0; gi < usable_grid.size(); ++gi) {
    const double t = usable_grid[gi];
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double w = predicted[i].at(t);
      if (static_cast<double>(times[i]) <= t) {
        if (observed[i]) acc += (1.0 - w) * (1.0 - w) / g.before(static_cast<double>(times[i]));
        // censored before t: weight 0
      } else {
        acc += w * w / g.at(t);
      }
    }
    bs[gi] = acc / static_cast<double>(n);
  }
  double integral = 0.0;
  for (size_t gi = 1; gi < usable_grid.size(); ++gi)
    integral += 0.5 * (bs[gi] + bs[gi - 1]) * (usable_grid[gi] - usable_grid[gi - 1]);
  return integral / (usable_grid.back() - usable_grid.front());
}

std::optional<Concordance> concordance_error(const std::vector<double>& scores,
                                             const std::vector<bool>& observed,
                                             const std::vector<long>& times) {
  const size_t n = scores.size();
  if (observed.size() != n || times.size() != n)
    throw std::invalid_argument("concordance_error: input length mismatch");
  double concordant = 0.0;
  long pairs = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!observed[i]) continue;
    for (size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (times[i] >= times[j]) continue;  // j must be event-free past T_i
      ++pairs;
      if (scores[i] > scores[j])
        concordant += 1.0;
      else if (scores[i] == scores[j])
        concordant += 0.5;
    }
  }
  if (pairs == 0) return std::nullopt;
  Concordance c;
  c.comparable_pairs = pairs;
  c.concordant_fraction = concordant / static_cast<double>(pairs);
  c.error = 1.0 - c.concordant_fraction;
  return c;
}

KMCurve kaplan_meier(const std::vector<bool>& observed, const std::vector<long>& times) {
  if (times.empty() || observed.size() != times.size())
    throw std::invalid_argument("kaplan_meier: bad input");
  std::map<long, std::pair<long, long>> at_time;  // time -> (deaths, censorings)
  for (size_t i = 0; i < times.size(); ++i) {
    auto& e = at_time[times[i]];
    (observed[i] ? e.first : e.second) += 1;
  }
  KMCurve curve;
  curve.times.push_back(0.0);
  curve.survival.push_back(1.0);
  const long n0 = static_cast<long>(times.size());
  long at_risk = n0;
  long seen_censorings = 0;
  double s = 1.0;
  for (const auto& [t, counts] : at_time) {
    const auto [d, c] = counts;
    if (d > 0) {
      if (seen_censorings == 0) {
        // the product telescopes while the sample is fully uncensored;
        // use the exact ratio so the curve equals the empirical survival
        s = static_cast<double>(at_risk - d) / static_cast<double>(n0);
      } else {
        s *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
      }
      curve.times.push_back(static_cast<double>(t));
      curve.survival.push_back(s);
    }
    seen_censorings += c;
    at_risk -= d + c;
  }
  return curve;
}

namespace {

bool comparable_times(const data::Cohort& cohort, int s, std::vector<bool>& observed,
                      std::vector<long>& times) {
  observed.clear();
  times.clear();
  for (const auto& p : cohort.patients) {
    observed.push_back(p.labels[s].observed);
    times.push_back(p.labels[s].time);
  }
  return !times.empty();
}

}  // namespace

MetricsReport build_report(const data::Cohort& cohort,
                           const std::vector<TypedPredictions>& per_type,
                           const std::vector<std::vector<StepFunction>>& rate_steps,
                           const std::vector<double>& thresholds) {
  const int S = cohort.n_events();
  if (static_cast<int>(per_type.size()) != S)
    throw std::invalid_argument("build_report: prediction/event-type count mismatch");
  MetricsReport report;
  report.event_names = cohort.event_names;
  report.per_type.resize(S);

  long horizon = 0;
  for (const auto& p : cohort.patients) horizon = std::max(horizon, p.visits.back().tau);
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(horizon * static_cast<double>(i) / 100.0);

  for (int s = 0; s < S; ++s) {
    EventTypeMetrics& m = report.per_type[s];
    m.threshold = thresholds[s];
    std::vector<bool> observed;
    std::vector<long> times;
    comparable_times(cohort, s, observed, times);
    const auto& preds = per_type[s];

    std::vector<bool> truth_b(observed.begin(), observed.end());
    m.auc = auc(preds.scores, truth_b);
    const auto [f1, acc] = f1_acc(preds.decisions, truth_b);
    m.f1 = f1;
    m.accuracy = acc;
    m.delta_t_days = delta_t(preds.decisions, preds.predicted_day, truth_b, times);

    std::vector<StepFunction> steps;
    steps.reserve(cohort.patients.size());
    for (size_t i = 0; i < cohort.patients.size(); ++i) steps.push_back(rate_steps[i][s]);
    m.brier = integrated_brier(steps, observed, times, grid);

    if (const auto c = concordance_error(preds.scores, observed, times)) {
      m.c_error = c->error;
      m.concordance = c->concordant_fraction;
    }
  }
  return report;
}

std::vector<std::vector<CodeImpact>> code_impact(
    const data::Cohort& cohort, const std::vector<std::vector<StepFunction>>& rate_steps) {
  const int S = cohort.n_events();
  const int P = data::Vocabulary::standard().size();
  std::vector<std::vector<double>> sums(S, std::vector<double>(P, 0.0));
  std::vector<std::vector<long>> counts(S, std::vector<long>(P, 0));
  for (size_t i = 0; i < cohort.patients.size(); ++i) {
    const auto& visits = cohort.patients[i].visits;
    const int n = static_cast<int>(visits.size());
    for (int r = 1; r + 1 < n; ++r) {  // boundary visits skipped
      for (int s = 0; s < S; ++s) {
        const StepFunction& f = rate_steps[i][s];
        const double gap = f.values[r + 1] - f.values[r - 1];
        for (int c : visits[r].codes) {
          sums[s][c] += gap;
          counts[s][c] += 1;
        }
      }
    }
  }
  std::vector<std::vector<CodeImpact>> out(S);
  for (int s = 0; s < S; ++s)
    for (int c = 0; c < P; ++c)
      if (counts[s][c] > 0)
        out[s].push_back({c, sums[s][c] / static_cast<double>(counts[s][c]), counts[s][c]});
  return out;
}

std::vector<std::vector<CodeImpact>> top_code_impacts(
    const std::vector<std::vector<CodeImpact>>& impacts, int k) {
  const auto& vocab = data::Vocabulary::standard();
  std::vector<std::vector<CodeImpact>> out;
  for (const auto& rows : impacts) {
    std::vector<CodeImpact> sorted = rows;
    std::sort(sorted.begin(), sorted.end(), [&](const CodeImpact& a, const CodeImpact& b) {
      if (a.mean_gap != b.mean_gap) return a.mean_gap > b.mean_gap;
      return vocab.name(a.code) < vocab.name(b.code);
    });
    if (k >= 0 && static_cast<int>(sorted.size()) > k) sorted.resize(k);
    out.push_back(std::move(sorted));
  }
  return out;
}

// ---- CSV ------------------------------------------------------------------

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string fmt_opt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

}  // namespace

std::string metrics_csv_header() {
  return "model,cohort,event_type,AUC,Acc,DeltaT,F1,Brier,C\n";
}

std::string metrics_csv(const std::string& model, const std::string& cohort_name,
                        const MetricsReport& report) {
  std::string out;
  for (size_t s = 0; s < report.per_type.size(); ++s) {
    const auto& m = report.per_type[s];
    out += model + "," + cohort_name + "," + report.event_names[s] + "," + fmt_opt(m.auc) + "," +
           fmt(m.accuracy) + "," + fmt_opt(m.delta_t_days) + "," + fmt(m.f1) + "," +
           fmt(m.brier) + "," + fmt_opt(m.c_error) + "\n";
  }
  return out;
}

std::string km_csv(const data::Cohort& cohort, const std::vector<TypedPredictions>& per_type) {
  std::string out = "event_type,source,time,survival\n";
  for (int s = 0; s < cohort.n_events(); ++s) {
    std::vector<bool> observed;
    std::vector<long> times;
    for (const auto& p : cohort.patients) {
      observed.push_back(p.labels[s].observed);
      times.push_back(p.labels[s].time);
    }
    const KMCurve truth = kaplan_meier(observed, times);
    std::vector<bool> pobs;
    std::vector<long> ptimes;
    for (size_t i = 0; i < cohort.patients.size(); ++i) {
      const bool dec = per_type[s].decisions[i];
      pobs.push_back(dec);
      ptimes.push_back(dec ? per_type[s].predicted_day[i] : cohort.patients[i].visits.back().tau);
    }
    const KMCurve pred = kaplan_meier(pobs, ptimes);
    for (size_t i = 0; i < truth.times.size(); ++i)
      out += cohort.event_names[s] + ",true," + fmt(truth.times[i]) + "," +
             fmt(truth.survival[i]) + "\n";
    for (size_t i = 0; i < pred.times.size(); ++i)
      out += cohort.event_names[s] + ",predicted," + fmt(pred.times[i]) + "," +
             fmt(pred.survival[i]) + "\n";
  }
  return out;
}

std::string predictions_csv(const data::Cohort& cohort,
                            const std::vector<TypedPredictions>& per_type) {
  std::string out = "patient_id,event_type,score,decision,predicted_day\n";
  for (size_t i = 0; i < cohort.patients.size(); ++i) {
    for (int s = 0; s < cohort.n_events(); ++s) {
      const auto& p = per_type[s];
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.9g", p.scores[i]);
      out += cohort.patients[i].id + "," + cohort.event_names[s] + "," + buf + "," +
             (p.decisions[i] ? "1" : "0") + ",";
      if (p.decisions[i]) out += std::to_string(p.predicted_day[i]);
      out += "\n";
    }
  }
  return out;
}

std::string code_impact_csv(const std::vector<std::vector<CodeImpact>>& impacts,
                            const std::vector<std::string>& event_names) {
  const auto& vocab = data::Vocabulary::standard();
  std::string out = "event_type,code,mean_gap,count\n";
  for (size_t s = 0; s < impacts.size(); ++s)
    for (const auto& row : impacts[s]) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.9g", row.mean_gap);
      out += event_names[s] + "," + vocab.name(row.code) + "," + buf + "," +
             std::to_string(row.count) + "\n";
    }
  return out;
}

}  // namespace eden::metrics
