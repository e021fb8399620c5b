#include "eden/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <stdexcept>

#include "eden/survival.hpp"

namespace eden::trainer {

using num::Matrix;
using num::Tape;

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batches_per_epoch < 1)
    throw std::invalid_argument("TrainConfig: batches_per_epoch must be >= 1");
}

namespace {

const std::vector<std::string>& train_config_keys() {
  static const std::vector<std::string> keys = {
      "learning_rate", "epochs",      "batches_per_epoch", "adam_beta1",      "adam_beta2",
      "adam_epsilon",  "clip_norm",   "seed",              "time_aware",      "bidirectional",
      "survival_output", "use_L2",    "use_L3",            "use_L4",          "alpha1",
      "alpha2",        "alpha3",      "alpha4",            "n_emb",           "n_hidden",
      "fc_size",       "dropout_rate", "trials",           "search_epochs"};
  return keys;
}

}  // namespace

TrainConfig TrainConfig::from_kv(const KvFile& kv) {
  kv.require_known_keys(train_config_keys());
  TrainConfig c;
  c.learning_rate = kv.get_double("learning_rate", c.learning_rate);
  c.epochs = static_cast<int>(kv.get_int("epochs", c.epochs));
  c.batches_per_epoch = static_cast<int>(kv.get_int("batches_per_epoch", c.batches_per_epoch));
  c.adam_beta1 = kv.get_double("adam_beta1", c.adam_beta1);
  c.adam_beta2 = kv.get_double("adam_beta2", c.adam_beta2);
  c.adam_epsilon = kv.get_double("adam_epsilon", c.adam_epsilon);
  c.clip_norm = kv.get_double("clip_norm", c.clip_norm);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
  c.time_aware = kv.get_bool("time_aware", c.time_aware);
  c.bidirectional = kv.get_bool("bidirectional", c.bidirectional);
  c.survival_output = kv.get_bool("survival_output", c.survival_output);
  c.use_L2 = kv.get_bool("use_L2", c.use_L2);
  c.use_L3 = kv.get_bool("use_L3", c.use_L3);
  c.use_L4 = kv.get_bool("use_L4", c.use_L4);
  c.alpha1 = kv.get_double("alpha1", c.alpha1);
  c.alpha2 = kv.get_double("alpha2", c.alpha2);
  c.alpha3 = kv.get_double("alpha3", c.alpha3);
  c.alpha4 = kv.get_double("alpha4", c.alpha4);
  c.validate();
  return c;
}

KvFile TrainConfig::to_kv() const {
  KvFile kv;
  kv.set_double("learning_rate", learning_rate);
  kv.set_int("epochs", epochs);
  kv.set_int("batches_per_epoch", batches_per_epoch);
  kv.set_double("adam_beta1", adam_beta1);
  kv.set_double("adam_beta2", adam_beta2);
  kv.set_double("adam_epsilon", adam_epsilon);
  kv.set_double("clip_norm", clip_norm);
  kv.set_int("seed", static_cast<long long>(seed));
  kv.set_bool("time_aware", time_aware);
  kv.set_bool("bidirectional", bidirectional);
  kv.set_bool("survival_output", survival_output);
  kv.set_bool("use_L2", use_L2);
  kv.set_bool("use_L3", use_L3);
  kv.set_bool("use_L4", use_L4);
  kv.set_double("alpha1", alpha1);
  kv.set_double("alpha2", alpha2);
  kv.set_double("alpha3", alpha3);
  kv.set_double("alpha4", alpha4);
  return kv;
}

std::vector<std::vector<int>> make_balanced_batches(const data::Cohort& cohort,
                                                    int batches_per_epoch, Rng& rng) {
  std::vector<int> uncensored, censored;
  for (size_t i = 0; i < cohort.patients.size(); ++i) {
    bool any = false;
    for (const auto& lab : cohort.patients[i].labels) any = any || lab.observed;
    (any ? uncensored : censored).push_back(static_cast<int>(i));
  }
  if (static_cast<int>(uncensored.size()) < batches_per_epoch)
    throw std::runtime_error("make_balanced_batches: fewer uncensored patients (" +
                             std::to_string(uncensored.size()) + ") than batches (" +
                             std::to_string(batches_per_epoch) + ")");
  if (censored.empty())
    throw std::runtime_error("make_balanced_batches: no censored patients to balance with");

  rng.shuffle(uncensored);
  // censored picks: without replacement until the pool runs dry, then refill
  std::vector<int> picks;
  picks.reserve(uncensored.size());
  while (picks.size() < uncensored.size()) {
    std::vector<int> pool = censored;
    rng.shuffle(pool);
    for (int idx : pool) {
      if (picks.size() == uncensored.size()) break;
      picks.push_back(idx);
    }
  }

  std::vector<std::vector<int>> batches(batches_per_epoch);
  const size_t n = uncensored.size();
  const size_t base = n / batches_per_epoch;
  const size_t extra = n % batches_per_epoch;
  size_t pos = 0;
  for (int b = 0; b < batches_per_epoch; ++b) {
    const size_t take = base + (static_cast<size_t>(b) < extra ? 1 : 0);
    for (size_t k = 0; k < take; ++k) {
      batches[b].push_back(uncensored[pos]);
      batches[b].push_back(picks[pos]);
      ++pos;
    }
  }
  return batches;
}

AdamState AdamState::init(const model::ParamStore& params) {
  AdamState s;
  for (int i = 0; i < params.count(); ++i) {
    const Matrix& t = params.tensor(i);
    s.m.push_back(Matrix::zeros(t.rows, t.cols));
    s.v.push_back(Matrix::zeros(t.rows, t.cols));
  }
  return s;
}

void adam_step(model::ParamStore& params, const std::vector<Matrix>& grads, AdamState& state,
               const TrainConfig& cfg) {
  if (static_cast<int>(grads.size()) != params.count())
    throw std::invalid_argument("adam_step: gradient count mismatch");
  for (const auto& g : grads)
    if (!g.all_finite()) throw std::runtime_error("adam_step: non-finite gradient");
  state.t += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (int k = 0; k < params.count(); ++k) {
    Matrix& p = params.tensor(k);
    const Matrix& g = grads[k];
    Matrix& m = state.m[k];
    Matrix& v = state.v[k];
    for (size_t i = 0; i < p.v.size(); ++i) {
      m.v[i] = b1 * m.v[i] + (1.0 - b1) * g.v[i];
      v.v[i] = b2 * v.v[i] + (1.0 - b2) * g.v[i] * g.v[i];
      const double mhat = m.v[i] / corr1;
      const double vhat = v.v[i] / corr2;
      p.v[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
    }
  }
}

namespace {

double grad_global_norm(const std::vector<Matrix>& grads) {
  double acc = 0.0;
  for (const auto& g : grads)
    for (double x : g.v) acc += x * x;
  return std::sqrt(acc);
}

struct ValScores {
  std::vector<std::vector<double>> scores;  // type x patient
  std::vector<std::vector<bool>> truth;     // type x patient
};

ValScores score_cohort(const model::Model& m, const data::Cohort& cohort) {
  const int S = cohort.n_events();
  ValScores vs;
  vs.scores.assign(S, {});
  vs.truth.assign(S, {});
  for (const auto& p : cohort.patients) {
    const auto rates = m.event_rates(p);
    for (int s = 0; s < S; ++s) {
      double best = 0.0;
      for (const auto& row : rates) best = std::max(best, row[s]);
      vs.scores[s].push_back(best);
      vs.truth[s].push_back(p.labels[s].observed);
    }
  }
  return vs;
}

const std::vector<double>& threshold_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g;
    for (int i = 1; i <= 19; ++i) g.push_back(i * 0.05);
    return g;
  }();
  return grid;
}

/// Best-F1 threshold per event type on the given scores.
std::pair<std::vector<double>, double> tune_thresholds(const ValScores& vs) {
  const int S = static_cast<int>(vs.scores.size());
  std::vector<double> thresholds(S, 0.5);
  double macro = 0.0;
  for (int s = 0; s < S; ++s) {
    double best_f1 = -1.0, best_t = 0.5;
    for (double t : threshold_grid()) {
      std::vector<bool> dec;
      dec.reserve(vs.scores[s].size());
      for (double x : vs.scores[s]) dec.push_back(x > t);
      const double f1 = metrics::f1_acc(dec, vs.truth[s]).first;
      if (f1 > best_f1) {
        best_f1 = f1;
        best_t = t;
      }
    }
    thresholds[s] = best_t;
    macro += best_f1;
  }
  return {thresholds, macro / S};
}

void check_disjoint(const data::Cohort& a, const data::Cohort& b) {
  std::set<std::string> ids;
  for (const auto& p : a.patients) ids.insert(p.id);
  for (const auto& p : b.patients)
    if (ids.count(p.id))
      throw std::invalid_argument("train: train/validation sets share patient " + p.id);
}

}  // namespace

TrainResult train(const model::ModelConfig& mcfg, const data::Cohort& train_set,
                  const data::Cohort& val_set, const TrainConfig& tcfg) {
  tcfg.validate();
  mcfg.validate();
  if (train_set.patients.empty() || val_set.patients.empty())
    throw std::invalid_argument("train: empty train or validation set");
  check_disjoint(train_set, val_set);

  const int S = train_set.n_events();
  loss::LossWeights weights;
  weights.alpha1 = tcfg.alpha1;
  weights.alpha2 = tcfg.alpha2;
  weights.alpha3 = tcfg.alpha3;
  weights.alpha4 = tcfg.alpha4;
  std::tie(weights.beta0, weights.beta1) = loss::compute_betas(train_set);

  Rng init_rng = Rng::substream(tcfg.seed, "init");
  model::Model current = model::Model::init(mcfg, tcfg.flags(), init_rng);
  AdamState adam = AdamState::init(current.params);

  std::vector<loss::PatientTargets> targets;
  targets.reserve(train_set.patients.size());
  for (const auto& p : train_set.patients) targets.push_back(loss::build_targets(p, S));

  TrainResult result;
  result.weights = weights;
  double best_macro = -1.0;

  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    Rng batch_rng = Rng::substream(tcfg.seed, "batching", static_cast<std::uint64_t>(epoch));
    const auto batches = make_balanced_batches(train_set, tcfg.batches_per_epoch, batch_rng);

    EpochLog log;
    log.epoch = epoch;
    double sum_l1 = 0, sum_l2 = 0, sum_l3 = 0, sum_l4 = 0, sum_total = 0;
    int done_batches = 0;

    for (size_t b = 0; b < batches.size(); ++b) {
      Rng drop_rng = Rng::substream(
          tcfg.seed, "dropout",
          static_cast<std::uint64_t>(epoch) * 10000 + static_cast<std::uint64_t>(b));
      Tape tape;
      tape.reserve(4096 * batches[b].size());
      const std::vector<Tape::Id> param_ids = model::insert_params(tape, current.params);

      std::vector<std::vector<Tape::Id>> outputs;
      std::vector<loss::PatientTargets> batch_targets;
      for (int pi : batches[b]) {
        const auto& rec = train_set.patients[pi];
        std::vector<Matrix> masks;
        const std::vector<Matrix>* mask_ptr = nullptr;
        if (mcfg.dropout_rate > 0.0) {
          masks = model::make_dropout_masks(static_cast<int>(rec.visits.size()), mcfg.fc_size,
                                            mcfg.dropout_rate, drop_rng);
          mask_ptr = &masks;
        }
        const auto fr = model::build_forward(tape, param_ids, current.params, mcfg, tcfg.flags(),
                                             rec, mask_ptr);
        outputs.push_back(fr.outputs);
        batch_targets.push_back(targets[pi]);
      }
      const loss::TapedLoss tl = loss::build_taped_loss(tape, outputs, batch_targets, weights,
                                                        tcfg.use_L2, tcfg.use_L3, tcfg.use_L4);
      const double total = tape.value(tl.total).v[0];
      if (!std::isfinite(total)) {
        std::cerr << "epoch " << epoch << " batch " << b << ": non-finite loss; epoch dropped\n";
        log.finite = false;
        break;
      }
      tape.backward(tl.total);

      std::vector<Matrix> grads;
      grads.reserve(param_ids.size());
      bool grads_finite = true;
      for (const Tape::Id id : param_ids) {
        grads.push_back(tape.grad(id));
        grads_finite = grads_finite && grads.back().all_finite();
      }
      if (!grads_finite) {
        std::cerr << "epoch " << epoch << " batch " << b
                  << ": non-finite gradient; epoch dropped\n";
        log.finite = false;
        break;
      }
      const double norm = grad_global_norm(grads);
      if (tcfg.clip_norm > 0.0 && norm > tcfg.clip_norm) {
        const double factor = tcfg.clip_norm / norm;
        for (auto& g : grads)
          for (auto& x : g.v) x *= factor;
      }
      adam_step(current.params, grads, adam, tcfg);

      sum_l1 += tape.value(tl.l1).v[0];
      sum_l2 += tape.value(tl.l2).v[0];
      sum_l3 += tape.value(tl.l3).v[0];
      sum_l4 += tape.value(tl.l4).v[0];
      sum_total += total;
      ++done_batches;
    }

    if (done_batches > 0) {
      log.l1 = sum_l1 / done_batches;
      log.l2 = sum_l2 / done_batches;
      log.l3 = sum_l3 / done_batches;
      log.l4 = sum_l4 / done_batches;
      log.total = sum_total / done_batches;
    }

    const ValScores vs = score_cohort(current, val_set);
    log.val_auc.assign(S, std::nan(""));
    for (int s = 0; s < S; ++s)
      if (const auto a = metrics::auc(vs.scores[s], vs.truth[s])) log.val_auc[s] = *a;
    const auto [thresholds, macro] = tune_thresholds(vs);
    log.val_macro_f1 = macro;
    result.log.push_back(log);

    if (log.finite && macro > best_macro) {
      best_macro = macro;
      result.best = current;  // parameter snapshot
      result.best_epoch = epoch;
      result.thresholds = thresholds;
    }
  }

  if (result.best_epoch < 0) {
    int first_bad = 0;
    for (const auto& l : result.log)
      if (!l.finite) {
        first_bad = l.epoch;
        break;
      }
    throw std::runtime_error("train: diverged (non-finite loss), first at epoch " +
                             std::to_string(first_bad));
  }
  return result;
}

std::string training_log_csv(const std::vector<EpochLog>& log,
                             const std::vector<std::string>& event_names) {
  std::string out = "epoch,L1,L2,L3,L4,L_total";
  for (const auto& name : event_names)
    out += ",val_AUC_" + (name == "second_cancer" ? std::string("second") : name);
  out += "\n";
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return std::string(buf);
  };
  for (const auto& l : log) {
    out += std::to_string(l.epoch) + "," + num(l.l1) + "," + num(l.l2) + "," + num(l.l3) + "," +
           num(l.l4) + "," + num(l.total);
    for (double a : l.val_auc) out += "," + (std::isnan(a) ? std::string() : num(a));
    out += "\n";
  }
  return out;
}

ModelPredictions predict_cohort(const model::Model& m, const data::Cohort& cohort,
                                const std::vector<double>& thresholds) {
  const int S = cohort.n_events();
  if (static_cast<int>(thresholds.size()) != S)
    throw std::invalid_argument("predict_cohort: threshold count mismatch");
  ModelPredictions out;
  out.per_type.resize(S);
  out.rate_steps.resize(cohort.patients.size());
  for (size_t i = 0; i < cohort.patients.size(); ++i) {
    const auto& rec = cohort.patients[i];
    const auto rates = m.event_rates(rec);
    std::vector<long> days;
    days.reserve(rec.visits.size());
    for (const auto& v : rec.visits) days.push_back(v.tau);
    out.rate_steps[i].resize(S);
    for (int s = 0; s < S; ++s) {
      std::vector<double> w;
      w.reserve(rates.size());
      for (const auto& row : rates) w.push_back(row[s]);
      const auto pred = survival::extract_prediction(w, days, thresholds[s]);
      out.per_type[s].scores.push_back(pred.score);
      out.per_type[s].decisions.push_back(pred.decision);
      out.per_type[s].predicted_day.push_back(pred.time.value_or(0));
      out.rate_steps[i][s] = metrics::StepFunction{days, std::move(w)};
    }
  }
  return out;
}

int select_best(const std::vector<double>& scores, const std::vector<long>& param_counts) {
  if (scores.empty() || scores.size() != param_counts.size())
    throw std::invalid_argument("select_best: bad input");
  int best = 0;
  for (int i = 1; i < static_cast<int>(scores.size()); ++i) {
    if (scores[i] > scores[best] ||
        (scores[i] == scores[best] && param_counts[i] < param_counts[best]))
      best = i;
  }
  return best;
}

SearchOutcome random_search(const SearchSpace& space, const model::ModelConfig& base,
                            const data::Cohort& train_set, const data::Cohort& val_set,
                            const TrainConfig& tcfg, Rng& rng) {
  if (space.trials < 1) throw std::invalid_argument("random_search: trials must be >= 1");
  SearchOutcome out;
  std::vector<long> param_counts;
  for (int trial = 0; trial < space.trials; ++trial) {
    model::ModelConfig cfg = base;
    cfg.n_emb = space.emb_sizes[rng.below(space.emb_sizes.size())];
    cfg.n_hidden = space.hidden_sizes[rng.below(space.hidden_sizes.size())];
    cfg.fc_size = space.fc_sizes[rng.below(space.fc_sizes.size())];
    cfg.dropout_rate = space.dropout_rates[rng.below(space.dropout_rates.size())];
    TrainConfig short_cfg = tcfg;
    short_cfg.epochs = space.search_epochs;
    const TrainResult r = train(cfg, train_set, val_set, short_cfg);
    double best_macro = 0.0;
    for (const auto& l : r.log) best_macro = std::max(best_macro, l.val_macro_f1);
    out.tried.push_back(cfg);
    out.macro_f1.push_back(best_macro);
    param_counts.push_back(cfg.param_count(tcfg.time_aware, tcfg.bidirectional));
  }
  out.best = out.tried[select_best(out.macro_f1, param_counts)];
  return out;
}

std::vector<AblationRow> ablation_suite(const model::ModelConfig& mcfg,
                                        const data::Cohort& train_set,
                                        const data::Cohort& val_set,
                                        const data::Cohort& test_set, const TrainConfig& base) {
  struct Variant {
    const char* name;
    bool time_aware, bidirectional, survival_output, l2, l3, l4;
  };
  static const Variant variants[] = {
      {"lstm", false, false, false, false, false, false},
      {"tlstm", true, false, false, false, false, false},
      {"bi_tlstm", true, true, false, false, false, false},
      {"bi_tlstm_surv_l1", true, true, true, false, false, false},
      {"bi_tlstm_surv_l1_l2", true, true, true, true, false, false},
      {"bi_tlstm_surv_l1_l2_l3", true, true, true, true, true, false},
      {"full", true, true, true, true, true, true},
  };
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    TrainConfig cfg = base;
    cfg.time_aware = v.time_aware;
    cfg.bidirectional = v.bidirectional;
    cfg.survival_output = v.survival_output;
    cfg.use_L2 = v.l2;
    cfg.use_L3 = v.l3;
    cfg.use_L4 = v.l4;
    const TrainResult r = train(mcfg, train_set, val_set, cfg);
    const ModelPredictions preds = predict_cohort(r.best, test_set, r.thresholds);
    AblationRow row;
    row.name = v.name;
    row.config = cfg;
    row.report = metrics::build_report(test_set, preds.per_type, preds.rate_steps, r.thresholds);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows,
                         const std::vector<std::string>& event_names) {
  std::string out = "model";
  for (const auto& name : event_names) out += ",AUC_" + name + ",Acc_" + name + ",DeltaT_" + name;
  out += "\n";
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return std::string(buf);
  };
  for (const auto& row : rows) {
    out += row.name;
    for (const auto& m : row.report.per_type) {
      out += "," + (m.auc ? num(*m.auc) : std::string());
      out += "," + num(m.accuracy);
      out += "," + (m.delta_t_days ? num(*m.delta_t_days) : std::string());
    }
    out += "\n";
  }
  return out;
}

}  // namespace eden::trainer
