#pragma once

#include <vector>

#include "eden/records.hpp"
#include "eden/survival.hpp"

namespace eden::baselines {

/// Hand-made decision rules: trigger-code sets per relapse type plus the
/// minimum delay after the initial breast surgery for locoregional calls.
struct AdhocRuleSet {
  std::vector<int> metastatic_triggers;    // Metastasis diagnosis + metastatic-only drugs
  std::vector<int> locoregional_triggers;  // the 4 breast surgery categories
  long locoregional_min_delay = 365;       // "at least one year", inclusive
  std::vector<int> second_cancer_triggers; // Other cancer diagnosis

  static AdhocRuleSet standard();
};

/// Rule-based predictions in event-type order (locoregional, metastatic,
/// second_cancer). Pure function of the single record.
std::vector<survival::Prediction> adhoc_predict(const data::PatientRecord& rec,
                                                const AdhocRuleSet& rules);

}  // namespace eden::baselines
