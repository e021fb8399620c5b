#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "eden/baselines.hpp"
#include "eden/generator.hpp"
#include "eden/metrics.hpp"
#include "eden/records.hpp"

using namespace eden;
using namespace eden::data;

namespace {

Visit visit(long tau, std::vector<int> codes) {
  Visit v;
  v.tau = tau;
  v.codes = std::move(codes);
  return v;
}

}  // namespace

TEST_CASE("vocabulary: 47 categories with the dual-kind tags") {
  const Vocabulary& v = Vocabulary::standard();
  CHECK(v.size() == 47);
  CHECK(v.kind(v.require("Chemotherapy")) == CodeKind::kProcedureAndDiagnosis);
  CHECK(v.kind(v.require("Radiotherapy")) == CodeKind::kProcedureAndDiagnosis);
  CHECK(v.kind(v.require("Mastectomy")) == CodeKind::kProcedure);
  CHECK(v.kind(v.require("Metastasis")) == CodeKind::kDiagnosis);
  CHECK(v.kind(v.require("Tamoxifen")) == CodeKind::kMedication);
  CHECK(metastatic_only_drugs().size() == 13);
  CHECK(breast_surgery_codes().size() == 4);
  CHECK_THROWS(v.require("Aspirin"));
  int procedures = 0, diagnoses = 0, medications = 0, dual = 0;
  for (int i = 0; i < v.size(); ++i) {
    switch (v.kind(i)) {
      case CodeKind::kProcedure: ++procedures; break;
      case CodeKind::kDiagnosis: ++diagnoses; break;
      case CodeKind::kMedication: ++medications; break;
      case CodeKind::kProcedureAndDiagnosis: ++dual; break;
    }
  }
  CHECK(procedures == 10);
  CHECK(dual == 2);
  CHECK(diagnoses == 6);
  CHECK(medications == 29);
}

TEST_CASE("merge_consecutive") {
  SUBCASE("identical consecutive code sets collapse to the earliest day") {
    const auto merged = merge_consecutive({visit(0, {1}), visit(3, {1}), visit(10, {2})});
    REQUIRE(merged.size() == 2);
    CHECK(merged[0].tau == 0);
    CHECK(merged[1].tau == 10);
  }
  SUBCASE("non-consecutive repeats stay") {
    const auto in = std::vector<Visit>{visit(0, {1}), visit(3, {2}), visit(5, {1})};
    CHECK(merge_consecutive(in) == in);
  }
  SUBCASE("single visit unchanged") {
    const auto in = std::vector<Visit>{visit(0, {1, 2})};
    CHECK(merge_consecutive(in) == in);
  }
  SUBCASE("idempotent on random inputs") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<Visit> in;
      long tau = 0;
      const int n = 1 + static_cast<int>(rng.below(12));
      for (int i = 0; i < n; ++i) {
        in.push_back(visit(tau, {static_cast<int>(rng.below(3))}));
        tau += 1 + static_cast<long>(rng.below(5));
      }
      const auto once = merge_consecutive(in);
      CHECK(merge_consecutive(once) == once);
      for (size_t i = 1; i < once.size(); ++i) CHECK(once[i].tau > once[i - 1].tau);
    }
  }
  SUBCASE("unsorted input rejected") {
    CHECK_THROWS_AS(merge_consecutive({visit(5, {1}), visit(0, {1})}), std::invalid_argument);
  }
}

TEST_CASE("cohort file round-trip") {
  GeneratorSpec spec;
  spec.patients = 50;
  spec.seed = 1234;
  spec.noise_rate = 0.1;
  const Cohort cohort = generate_cohort(spec);

  const auto path = std::filesystem::temp_directory_path() / "eden_cohort_test.cohort";
  write_cohort(cohort, path.string());
  const Cohort loaded = read_cohort(path.string());
  REQUIRE(loaded.patients.size() == cohort.patients.size());
  CHECK(loaded.event_names == cohort.event_names);
  // byte-identical re-serialization
  CHECK(serialize_cohort(loaded) == serialize_cohort(cohort));
  for (size_t i = 0; i < cohort.patients.size(); ++i) {
    CHECK(loaded.patients[i].id == cohort.patients[i].id);
    CHECK(loaded.patients[i].visits == cohort.patients[i].visits);
  }
  std::filesystem::remove(path);
}

TEST_CASE("cohort file errors carry line numbers and code names") {
  SUBCASE("decreasing visit days rejected") {
    const std::string text =
        "p1\tlocoregional:0:30;metastatic:0:30;second_cancer:0:30\t0:Mastectomy;30:Chemotherapy\n"
        "p2\tlocoregional:0:5;metastatic:0:5;second_cancer:0:5\t0:Mastectomy;5:Node;3:Node\n";
    try {
      parse_cohort(text, "test");
      FAIL("expected a parse error");
    } catch (const std::exception& e) {
      const std::string msg = e.what();
      CHECK(msg.find("test:2") != std::string::npos);
      CHECK(msg.find("increasing") != std::string::npos);
    }
  }
  SUBCASE("unknown code named in the error") {
    const std::string text = "p1\tlocoregional:0:0\t0:Warfarin\n";
    try {
      parse_cohort(text, "test");
      FAIL("expected a parse error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("Warfarin") != std::string::npos);
    }
  }
  SUBCASE("empty file parses to an empty cohort") {
    const Cohort c = parse_cohort("", "test");
    CHECK(c.patients.empty());
  }
}

TEST_CASE("compute_stats") {
  SUBCASE("single censored patient") {
    Cohort c;
    c.event_names = {"e"};
    PatientRecord rec;
    rec.id = "p";
    rec.visits = {visit(0, {0}), visit(10, {1}), visit(50, {0}), visit(100, {1})};
    rec.labels = {{false, 100}};
    c.patients.push_back(rec);
    const CohortStats s = compute_stats(c);
    CHECK(s.censoring_rate == 1.0);
    CHECK(s.time_to_censor == 100.0);
    CHECK(s.visits_per_patient == 4.0);
  }
  SUBCASE("visit means") {
    Cohort c;
    c.event_names = {"e"};
    PatientRecord a;
    a.id = "a";
    for (int j = 0; j < 10; ++j) a.visits.push_back(visit(j * 10, {0}));
    a.labels = {{false, 90}};
    PatientRecord b;
    b.id = "b";
    for (int j = 0; j < 20; ++j) b.visits.push_back(visit(j * 10, {0}));
    b.labels = {{false, 190}};
    c.patients = {a, b};
    CHECK(compute_stats(c).visits_per_patient == 15.0);
  }
  SUBCASE("empty cohort rejected") {
    Cohort c;
    CHECK_THROWS(compute_stats(c));
  }
}

TEST_CASE("generator determinism: same seed, same bytes") {
  GeneratorSpec spec;
  spec.patients = 40;
  spec.seed = 777;
  spec.noise_rate = 0.2;
  CHECK(serialize_cohort(generate_cohort(spec)) == serialize_cohort(generate_cohort(spec)));
}

TEST_CASE("generator: every record satisfies the invariants (10^4 patients)") {
  GeneratorSpec spec;
  spec.patients = 10000;
  spec.seed = 31415;
  spec.noise_rate = 0.1;
  const Cohort cohort = generate_cohort(spec);  // generate_cohort validates every record
  CHECK(cohort.patients.size() == 10000);
  for (const auto& p : cohort.patients)
    validate_record(p, cohort.n_events(), Vocabulary::standard().size());
}

TEST_CASE("generator calibration at scale") {
  GeneratorSpec spec;
  spec.patients = 5000;
  spec.seed = 2718;
  const Cohort cohort = generate_cohort(spec);
  const CohortStats s = compute_stats(cohort);

  // empirical event rates within +-1% absolute of the spec rates
  CHECK(std::fabs(s.event_rate[0] - spec.rate_locoregional) < 0.01);
  CHECK(std::fabs(s.event_rate[1] - spec.rate_metastatic) < 0.01);
  CHECK(std::fabs(s.event_rate[2] - spec.rate_second_cancer) < 0.01);
  // censoring within +-2%
  CHECK(std::fabs(s.censoring_rate - spec.censoring_rate) < 0.02);
  // mean time to metastasis within +-15% of the target
  CHECK(std::fabs(s.time_to_event[1] - spec.mean_time_metastatic) <
        0.15 * spec.mean_time_metastatic);
  // desk-scale calibration targets: visit volume and censoring-time scale
  CHECK(s.visits_per_patient > 24.8 * 0.8);
  CHECK(s.visits_per_patient < 24.8 * 1.2);
  CHECK(std::fabs(s.time_to_censor - spec.mean_time_censor) < 0.15 * spec.mean_time_censor);
  CHECK(s.codes_per_visit > 1.05);
  CHECK(s.codes_per_visit < 2.0);
}

TEST_CASE("noise-free cohorts are perfectly separable for the trigger rules") {
  GeneratorSpec spec;
  spec.patients = 600;
  spec.seed = 99;
  spec.noise_rate = 0.0;
  const Cohort cohort = generate_cohort(spec);
  const auto rules = baselines::AdhocRuleSet::standard();
  for (int s : {1, 2}) {  // metastatic, second cancer
    std::vector<bool> decisions, truths;
    for (const auto& p : cohort.patients) {
      const auto preds = baselines::adhoc_predict(p, rules);
      decisions.push_back(preds[s].decision);
      truths.push_back(p.labels[s].observed);
    }
    CHECK(metrics::f1_acc(decisions, truths).first == 1.0);
  }
}

TEST_CASE("infeasible generator specs are rejected") {
  GeneratorSpec spec;
  SUBCASE("rates and censoring must sum to ~1") {
    spec.censoring_rate = 0.5;
    CHECK_THROWS(spec.validate());
  }
  SUBCASE("rates too low for censoring target") {
    // sum is inside the 0.05 window but every uncensored patient would need
    // an event the marginals cannot supply
    spec.rate_locoregional = 0.02;
    spec.rate_metastatic = 0.02;
    spec.rate_second_cancer = 0.02;
    spec.censoring_rate = 0.90;
    CHECK_THROWS(spec.validate());
  }
  SUBCASE("bad key in spec file") {
    KvFile kv;
    kv.set("patients", "100");
    kv.set("noise", "0.1");  // should be noise_rate
    CHECK_THROWS_WITH_AS(GeneratorSpec::from_kv(kv), "unknown config key: noise",
                         std::runtime_error);
  }
}
