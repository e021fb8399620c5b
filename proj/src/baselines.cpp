#include "eden/baselines.hpp"

#include <algorithm>

namespace eden::baselines {

AdhocRuleSet AdhocRuleSet::standard() {
  const auto& vocab = data::Vocabulary::standard();
  AdhocRuleSet r;
  r.metastatic_triggers.push_back(vocab.require("Metastasis"));
  for (const auto& drug : data::metastatic_only_drugs())
    r.metastatic_triggers.push_back(vocab.require(drug));
  r.locoregional_triggers = vocab.indices_of(data::breast_surgery_codes());
  r.second_cancer_triggers.push_back(vocab.require("Other cancer"));
  return r;
}

namespace {

bool has_any(const data::Visit& visit, const std::vector<int>& triggers) {
  for (int c : visit.codes)
    if (std::find(triggers.begin(), triggers.end(), c) != triggers.end()) return true;
  return false;
}

survival::Prediction first_hit(const data::PatientRecord& rec, const std::vector<int>& triggers,
                               long not_before) {
  survival::Prediction p;
  for (const auto& v : rec.visits) {
    if (v.tau < not_before) continue;
    if (has_any(v, triggers)) {
      p.score = 1.0;
      p.decision = true;
      p.time = v.tau;
      return p;
    }
  }
  return p;
}

}  // namespace

std::vector<survival::Prediction> adhoc_predict(const data::PatientRecord& rec,
                                                const AdhocRuleSet& rules) {
  // anchor: first visit carrying any breast surgery code, else day 0
  long first_surgery = 0;
  for (const auto& v : rec.visits) {
    if (has_any(v, rules.locoregional_triggers)) {
      first_surgery = v.tau;
      break;
    }
  }
  std::vector<survival::Prediction> out(3);
  out[0] = first_hit(rec, rules.locoregional_triggers, first_surgery + rules.locoregional_min_delay);
  out[1] = first_hit(rec, rules.metastatic_triggers, 0);
  out[2] = first_hit(rec, rules.second_cancer_triggers, 0);
  return out;
}

}  // namespace eden::baselines
