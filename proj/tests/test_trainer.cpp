#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "eden/generator.hpp"
#include "eden/trainer.hpp"

using namespace eden;
using namespace eden::trainer;
using num::Matrix;

namespace {

data::Cohort synthetic(int patients, std::uint64_t seed, double noise = 0.0) {
  data::GeneratorSpec spec;
  spec.patients = patients;
  spec.seed = seed;
  spec.noise_rate = noise;
  return data::generate_cohort(spec);
}

data::Cohort slice(const data::Cohort& c, size_t begin, size_t end) {
  data::Cohort out;
  out.event_names = c.event_names;
  for (size_t i = begin; i < end; ++i) out.patients.push_back(c.patients[i]);
  return out;
}

bool is_uncensored(const data::PatientRecord& p) {
  for (const auto& lab : p.labels)
    if (lab.observed) return true;
  return false;
}

}  // namespace

TEST_CASE("balanced batches") {
  data::Cohort cohort;
  cohort.event_names = {"e"};
  // 40 uncensored + 200 censored
  for (int i = 0; i < 240; ++i) {
    data::PatientRecord rec;
    rec.id = "p" + std::to_string(i);
    rec.visits.push_back({0, {0}});
    rec.visits.push_back({30, {1}});
    const bool uncensored = i < 40;
    rec.labels = {{uncensored, uncensored ? 30L : 30L}};
    cohort.patients.push_back(rec);
  }

  SUBCASE("40 uncensored across 10 batches gives 4+4 per batch") {
    Rng rng(1);
    const auto batches = make_balanced_batches(cohort, 10, rng);
    REQUIRE(batches.size() == 10);
    for (const auto& b : batches) {
      long unc = 0, cen = 0;
      for (int idx : b) (is_uncensored(cohort.patients[idx]) ? unc : cen) += 1;
      CHECK(unc == 4);
      CHECK(cen == 4);
    }
  }
  SUBCASE("same seed, identical composition") {
    Rng a(7), b(7);
    CHECK(make_balanced_batches(cohort, 10, a) == make_balanced_batches(cohort, 10, b));
  }
  SUBCASE("every uncensored patient appears exactly once per epoch; balance +-1") {
    for (int epoch = 0; epoch < 20; ++epoch) {
      Rng rng(100 + epoch);
      const auto batches = make_balanced_batches(cohort, 7, rng);  // 40 / 7 uneven
      std::multiset<int> seen;
      for (const auto& b : batches) {
        long unc = 0, cen = 0;
        for (int idx : b) {
          if (is_uncensored(cohort.patients[idx])) {
            seen.insert(idx);
            ++unc;
          } else {
            ++cen;
          }
        }
        CHECK(std::abs(unc - cen) <= 1);
      }
      CHECK(seen.size() == 40);
      CHECK(std::set<int>(seen.begin(), seen.end()).size() == 40);
    }
  }
  SUBCASE("no censored patients is an error") {
    data::Cohort events_only;
    events_only.event_names = {"e"};
    for (int i = 0; i < 12; ++i) {
      data::PatientRecord rec;
      rec.id = "p" + std::to_string(i);
      rec.visits.push_back({0, {0}});
      rec.labels = {{true, 0}};
      events_only.patients.push_back(rec);
    }
    Rng rng(1);
    CHECK_THROWS(make_balanced_batches(events_only, 4, rng));
  }
  SUBCASE("fewer uncensored than batches is an error") {
    Rng rng(1);
    CHECK_THROWS(make_balanced_batches(cohort, 50, rng));
  }
}

TEST_CASE("adam_step") {
  model::ParamStore params;
  params.add("w", Matrix::of(2, 1, {1.0, -2.0}));
  params.add("b", Matrix::of(2, 1, {0.5, 0.25}));
  AdamState state = AdamState::init(params);
  TrainConfig cfg;
  cfg.learning_rate = 0.01;

  SUBCASE("first step moves every coordinate by about lr") {
    const std::vector<Matrix> grads = {Matrix::of(2, 1, {0.3, -0.7}),
                                       Matrix::of(2, 1, {2.0, 0.001})};
    adam_step(params, grads, state, cfg);
    CHECK(params.at("w")(0, 0) == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
    CHECK(params.at("w")(1, 0) == doctest::Approx(-2.0 + 0.01).epsilon(1e-6));
    CHECK(params.at("b")(0, 0) == doctest::Approx(0.5 - 0.01).epsilon(1e-6));
    CHECK(params.at("b")(1, 0) == doctest::Approx(0.25 - 0.01).epsilon(1e-4));
  }
  SUBCASE("zero gradient leaves parameters unchanged") {
    const std::vector<Matrix> grads = {Matrix::zeros(2, 1), Matrix::zeros(2, 1)};
    adam_step(params, grads, state, cfg);
    CHECK(params.at("w").v == std::vector<double>{1.0, -2.0});
    CHECK(params.at("b").v == std::vector<double>{0.5, 0.25});
  }
  SUBCASE("identical gradients produce identical updates across tensors") {
    const std::vector<Matrix> grads = {Matrix::of(2, 1, {0.4, -0.2}),
                                       Matrix::of(2, 1, {0.4, -0.2})};
    adam_step(params, grads, state, cfg);
    CHECK(params.at("w")(0, 0) - 1.0 == doctest::Approx(params.at("b")(0, 0) - 0.5).epsilon(1e-15));
    CHECK(params.at("w")(1, 0) + 2.0 == doctest::Approx(params.at("b")(1, 0) - 0.25).epsilon(1e-15));
  }
  SUBCASE("non-finite gradients abort") {
    const std::vector<Matrix> grads = {Matrix::of(2, 1, {0.1, std::nan("")}),
                                       Matrix::zeros(2, 1)};
    CHECK_THROWS(adam_step(params, grads, state, cfg));
  }
}

TEST_CASE("train config validation and round-trip") {
  TrainConfig cfg;
  CHECK(cfg.epochs == 500);
  CHECK(cfg.learning_rate == 0.001);
  CHECK(cfg.batches_per_epoch == 10);
  cfg.epochs = 0;
  CHECK_THROWS(cfg.validate());
  cfg.epochs = 5;
  cfg.learning_rate = -1;
  CHECK_THROWS(cfg.validate());

  KvFile kv;
  kv.set("epochs", "7");
  kv.set("use_L3", "false");
  const TrainConfig parsed = TrainConfig::from_kv(kv);
  CHECK(parsed.epochs == 7);
  CHECK_FALSE(parsed.use_L3);
  CHECK(parsed.alpha1 == 10.0);  // untouched defaults

  KvFile bad;
  bad.set("learnig_rate", "0.1");
  CHECK_THROWS_WITH_AS(TrainConfig::from_kv(bad), "unknown config key: learnig_rate",
                       std::runtime_error);
}

TEST_CASE("select_best: argmax with parameter-count tie break") {
  CHECK(select_best({0.4, 0.9, 0.2}, {10, 20, 5}) == 1);
  CHECK(select_best({0.9, 0.9, 0.2}, {30, 20, 5}) == 1);  // tie -> fewer params
  CHECK(select_best({0.9, 0.9}, {20, 20}) == 0);          // full tie -> earlier
  CHECK_THROWS(select_best({}, {}));
}

TEST_CASE("train and random_search on a tiny cohort") {
  const data::Cohort whole = synthetic(160, 42);
  const data::Cohort train_set = slice(whole, 0, 120);
  const data::Cohort val_set = slice(whole, 120, 160);

  model::ModelConfig mcfg;
  mcfg.vocab_size = 47;
  mcfg.n_emb = 6;
  mcfg.n_hidden = 8;
  mcfg.fc_size = 12;
  mcfg.dropout_rate = 0.0;
  mcfg.n_events = 3;

  TrainConfig tcfg;
  tcfg.epochs = 3;
  tcfg.seed = 7;

  SUBCASE("training is deterministic given the seed") {
    const TrainResult a = train(mcfg, train_set, val_set, tcfg);
    const TrainResult b = train(mcfg, train_set, val_set, tcfg);
    CHECK(a.best_epoch == b.best_epoch);
    CHECK(a.thresholds == b.thresholds);
    REQUIRE(a.best.params.count() == b.best.params.count());
    for (int i = 0; i < a.best.params.count(); ++i)
      CHECK(a.best.params.tensor(i).v == b.best.params.tensor(i).v);
    CHECK(training_log_csv(a.log, train_set.event_names) ==
          training_log_csv(b.log, train_set.event_names));
  }
  SUBCASE("training log CSV has the pinned columns") {
    const TrainResult r = train(mcfg, train_set, val_set, tcfg);
    const std::string csv = training_log_csv(r.log, train_set.event_names);
    CHECK(csv.rfind("epoch,L1,L2,L3,L4,L_total,val_AUC_locoregional,val_AUC_metastatic,"
                    "val_AUC_second\n", 0) == 0);
    // one line per epoch plus header
    CHECK(std::count(csv.begin(), csv.end(), '\n') == tcfg.epochs + 1);
  }
  SUBCASE("overlapping train/val rejected") {
    CHECK_THROWS(train(mcfg, train_set, train_set, tcfg));
  }
  SUBCASE("random_search: single trial returns that configuration, deterministically") {
    SearchSpace space;
    space.emb_sizes = {4, 6};
    space.hidden_sizes = {6, 8};
    space.fc_sizes = {8, 12};
    space.dropout_rates = {0.0, 0.25};
    space.trials = 2;
    space.search_epochs = 1;
    Rng rng1(9), rng2(9);
    const auto a = random_search(space, mcfg, train_set, val_set, tcfg, rng1);
    const auto b = random_search(space, mcfg, train_set, val_set, tcfg, rng2);
    CHECK(a.best.n_emb == b.best.n_emb);
    CHECK(a.best.n_hidden == b.best.n_hidden);
    CHECK(a.best.fc_size == b.best.fc_size);
    CHECK(a.tried.size() == 2);

    space.trials = 1;
    Rng rng3(11);
    const auto single = random_search(space, mcfg, train_set, val_set, tcfg, rng3);
    CHECK(single.tried.size() == 1);
    CHECK(single.best.n_emb == single.tried[0].n_emb);
    CHECK(single.best.dropout_rate == single.tried[0].dropout_rate);
  }
}

TEST_CASE("default search space matches the documented grids") {
  const SearchSpace space;
  CHECK(space.emb_sizes == std::vector<int>{25, 50, 128, 256});
  CHECK(space.hidden_sizes == std::vector<int>{128, 256, 512, 1024, 2048});
  CHECK(space.fc_sizes == std::vector<int>{128, 256, 512, 1024, 2048});
  CHECK(space.dropout_rates == std::vector<double>{0.0, 0.25, 0.5, 0.75});
  CHECK(space.search_epochs == 10);
}

TEST_CASE("non-survival output reads the head directly; chain rule only when enabled") {
  model::ModelConfig cfg;
  cfg.vocab_size = 47;
  cfg.n_emb = 5;
  cfg.n_hidden = 6;
  cfg.fc_size = 8;
  cfg.dropout_rate = 0.0;
  cfg.n_events = 3;
  Rng rng(3);
  model::Model surv = model::Model::init(cfg, {true, true, true}, rng);
  model::Model raw = surv;
  raw.flags.survival_output = false;

  const data::Cohort c = synthetic(5, 5);
  const auto& rec = c.patients[0];
  const auto rates_surv = surv.event_rates(rec);
  const auto rates_raw = raw.event_rates(rec);
  REQUIRE(rates_surv.size() == rates_raw.size());
  // survival output is the running complement-product of the raw hazards
  for (int s = 0; s < 3; ++s) {
    double running = 1.0;
    for (size_t j = 0; j < rates_raw.size(); ++j) {
      running *= 1.0 - rates_raw[j][s];
      CHECK(rates_surv[j][s] == doctest::Approx(1.0 - running).epsilon(1e-12));
    }
  }
  // raw outputs are not monotone in general; survival outputs are
  for (int s = 0; s < 3; ++s)
    for (size_t j = 1; j < rates_surv.size(); ++j)
      CHECK(rates_surv[j][s] >= rates_surv[j - 1][s]);
}
