#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eden/kvconfig.hpp"
#include "eden/loss.hpp"
#include "eden/metrics.hpp"
#include "eden/model.hpp"
#include "eden/records.hpp"
#include "eden/rng.hpp"

namespace eden::trainer {

struct TrainConfig {
  double learning_rate = 0.001;
  int epochs = 500;
  int batches_per_epoch = 10;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double clip_norm = 5.0;  // global-norm gradient clip
  std::uint64_t seed = 42;
  // ablation flags
  bool time_aware = true;
  bool bidirectional = true;
  bool survival_output = true;
  bool use_L2 = true;
  bool use_L3 = true;
  bool use_L4 = true;
  double alpha1 = 10.0, alpha2 = 1.0, alpha3 = 1.0, alpha4 = 1.0;

  void validate() const;
  model::ArchFlags flags() const { return {time_aware, bidirectional, survival_output}; }

  static TrainConfig from_kv(const KvFile& kv);
  KvFile to_kv() const;
};

struct SearchSpace {
  std::vector<int> emb_sizes = {25, 50, 128, 256};
  std::vector<int> hidden_sizes = {128, 256, 512, 1024, 2048};
  std::vector<int> fc_sizes = {128, 256, 512, 1024, 2048};
  std::vector<double> dropout_rates = {0.0, 0.25, 0.5, 0.75};
  int trials = 10;
  int search_epochs = 10;
};

/// Balanced mini-batches of patient indices: the uncensored patients are
/// shuffled and split across `batches_per_epoch` batches, then each batch
/// receives the same number of censored patients, drawn without replacement
/// while the censored pool lasts.
std::vector<std::vector<int>> make_balanced_batches(const data::Cohort& cohort,
                                                    int batches_per_epoch, Rng& rng);

/// Adam state; moment tensors are index-aligned with the parameter store.
struct AdamState {
  std::vector<num::Matrix> m;
  std::vector<num::Matrix> v;
  long t = 0;

  static AdamState init(const model::ParamStore& params);
};

/// One bias-corrected Adam update (minimization). Throws on non-finite
/// gradients.
void adam_step(model::ParamStore& params, const std::vector<num::Matrix>& grads, AdamState& state,
               const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;
  double l1 = 0, l2 = 0, l3 = 0, l4 = 0, total = 0;
  std::vector<double> val_auc;  // per event type; NaN when undefined
  double val_macro_f1 = 0;
  bool finite = true;
};

struct TrainResult {
  model::Model best;
  int best_epoch = -1;  // 1-based
  std::vector<double> thresholds;  // per event type, tuned on validation
  std::vector<EpochLog> log;
  loss::LossWeights weights;
};

TrainResult train(const model::ModelConfig& mcfg, const data::Cohort& train_set,
                  const data::Cohort& val_set, const TrainConfig& tcfg);

/// Training log CSV: epoch,L1,L2,L3,L4,L_total,val_AUC_<type>...
std::string training_log_csv(const std::vector<EpochLog>& log,
                             const std::vector<std::string>& event_names);

struct ModelPredictions {
  std::vector<metrics::TypedPredictions> per_type;
  std::vector<std::vector<metrics::StepFunction>> rate_steps;  // patient x type
};

ModelPredictions predict_cohort(const model::Model& m, const data::Cohort& cohort,
                                const std::vector<double>& thresholds);

/// Argmax by score; ties broken by smaller parameter count, then by earlier
/// candidate. Exposed for tests.
int select_best(const std::vector<double>& scores, const std::vector<long>& param_counts);

struct SearchOutcome {
  model::ModelConfig best;
  std::vector<model::ModelConfig> tried;
  std::vector<double> macro_f1;
};

SearchOutcome random_search(const SearchSpace& space, const model::ModelConfig& base,
                            const data::Cohort& train_set, const data::Cohort& val_set,
                            const TrainConfig& tcfg, Rng& rng);

struct AblationRow {
  std::string name;
  TrainConfig config;
  metrics::MetricsReport report;
};

/// The seven architecture/loss variants, trained with identical seeds and
/// evaluated on the test set, in fixed order: plain LSTM, time-aware LSTM,
/// bidirectional time-aware LSTM, survival output with the weighted BCE
/// alone, then adding the event-hit and pre-event terms, then the full
/// model.
std::vector<AblationRow> ablation_suite(const model::ModelConfig& mcfg,
                                        const data::Cohort& train_set,
                                        const data::Cohort& val_set,
                                        const data::Cohort& test_set, const TrainConfig& base);

std::string ablation_csv(const std::vector<AblationRow>& rows,
                         const std::vector<std::string>& event_names);

}  // namespace eden::trainer
