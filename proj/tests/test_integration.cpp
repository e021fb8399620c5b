#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "eden/generator.hpp"
#include "eden/metrics.hpp"
#include "eden/trainer.hpp"

using namespace eden;
using namespace eden::trainer;

namespace {

data::Cohort slice(const data::Cohort& c, size_t begin, size_t end) {
  data::Cohort out;
  out.event_names = c.event_names;
  for (size_t i = begin; i < end; ++i) out.patients.push_back(c.patients[i]);
  return out;
}

model::ModelConfig small_model() {
  model::ModelConfig cfg;
  cfg.vocab_size = 47;
  cfg.n_emb = 12;
  cfg.n_hidden = 16;
  cfg.fc_size = 32;
  cfg.dropout_rate = 0.25;
  cfg.n_events = 3;
  return cfg;
}

}  // namespace

TEST_CASE("separable cohort: the full model reaches AUC >= 0.99 within 50 epochs") {
  data::GeneratorSpec spec;
  spec.patients = 400;
  spec.seed = 20240601;
  spec.noise_rate = 0.0;
  const data::Cohort whole = data::generate_cohort(spec);
  const data::Cohort train_set = slice(whole, 0, 280);
  const data::Cohort val_set = slice(whole, 280, 400);

  TrainConfig tcfg;
  tcfg.epochs = 100;
  tcfg.seed = 11;
  // the tiny desk model needs a faster step than the full-size default: an
  // epoch is only ten adam updates
  tcfg.learning_rate = 0.005;

  const TrainResult r = train(small_model(), train_set, val_set, tcfg);

  double best_min_auc = 0.0;
  int reach_epoch = -1;
  for (const auto& log : r.log) {
    double min_auc = 1.0;
    for (double a : log.val_auc) min_auc = std::min(min_auc, std::isnan(a) ? 0.0 : a);
    if (min_auc > best_min_auc) best_min_auc = min_auc;
    if (reach_epoch < 0 && min_auc >= 0.99) reach_epoch = log.epoch;
  }
  INFO("best min-AUC over types: ", best_min_auc, ", reached 0.99 at epoch ", reach_epoch);
  CHECK(reach_epoch > 0);
  CHECK(reach_epoch <= 50);

  SUBCASE("training loss trends down: 20-epoch window means after epoch 50") {
    std::vector<double> totals;
    for (const auto& log : r.log) totals.push_back(log.total);
    auto window_mean = [&](int start) {  // epochs start..start+19, 1-based
      double acc = 0.0;
      for (int e = start; e < start + 20; ++e) acc += totals[e - 1];
      return acc / 20.0;
    };
    int windows = 0, violations = 0;
    for (int start = 51; start + 20 + 1 <= static_cast<int>(totals.size()); ++start) {
      ++windows;
      if (window_mean(start + 1) > window_mean(start) * (1.0 + 1e-9)) ++violations;
    }
    REQUIRE(windows > 0);
    INFO(violations, " of ", windows, " windows increased");
    CHECK(violations <= std::max(1, windows / 20));  // allow 5%
  }

  SUBCASE("interpretability: metastatic-only drugs rank in the top-5 positive gaps") {
    const ModelPredictions preds = predict_cohort(r.best, val_set, r.thresholds);
    const auto impacts = metrics::code_impact(val_set, preds.rate_steps);
    const auto top = metrics::top_code_impacts(impacts, 5);
    const auto& drugs = data::metastatic_only_drugs();
    const auto& vocab = data::Vocabulary::standard();
    int metastatic_hits = 0;
    for (const auto& row : top[1]) {  // event type 1 = metastatic
      const std::string& name = vocab.name(row.code);
      if (name == "Metastasis" ||
          std::find(drugs.begin(), drugs.end(), name) != drugs.end())
        ++metastatic_hits;
    }
    INFO("metastatic signature codes in the metastatic top-5: ", metastatic_hits);
    CHECK(metastatic_hits >= 1);
  }

  SUBCASE("detection quality on the validation set") {
    const ModelPredictions preds = predict_cohort(r.best, val_set, r.thresholds);
    const auto report =
        metrics::build_report(val_set, preds.per_type, preds.rate_steps, r.thresholds);
    for (int s = 0; s < 3; ++s) {
      INFO("type ", val_set.event_names[s], " f1=", report.per_type[s].f1);
      CHECK(report.per_type[s].f1 >= 0.8);
      if (report.per_type[s].delta_t_days)
        CHECK(std::fabs(*report.per_type[s].delta_t_days) <= 45.0);
    }
  }
}

TEST_CASE("plain LSTM baseline learns the separable metastatic signature (AUC >= 0.95)") {
  data::GeneratorSpec spec;
  spec.patients = 300;
  spec.seed = 77;
  spec.noise_rate = 0.0;
  const data::Cohort whole = data::generate_cohort(spec);
  const data::Cohort train_set = slice(whole, 0, 210);
  const data::Cohort val_set = slice(whole, 210, 300);

  TrainConfig tcfg;
  tcfg.epochs = 60;
  tcfg.seed = 5;
  // the plain-LSTM pipeline: no time awareness, no bidirection, no survival
  // output, weighted BCE only
  tcfg.time_aware = false;
  tcfg.bidirectional = false;
  tcfg.survival_output = false;
  tcfg.use_L2 = tcfg.use_L3 = tcfg.use_L4 = false;

  const TrainResult r = train(small_model(), train_set, val_set, tcfg);
  double best_met_auc = 0.0;
  for (const auto& log : r.log)
    if (!std::isnan(log.val_auc[1])) best_met_auc = std::max(best_met_auc, log.val_auc[1]);
  INFO("best metastatic AUC: ", best_met_auc);
  CHECK(best_met_auc >= 0.95);
}
