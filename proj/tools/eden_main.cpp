// eden: survival-event detection in right-censored medical code sequences.
// Subcommands wire the library into reproducible, manifest-stamped runs.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "eden/baselines.hpp"
#include "eden/generator.hpp"
#include "eden/kvconfig.hpp"
#include "eden/metrics.hpp"
#include "eden/model.hpp"
#include "eden/records.hpp"
#include "eden/trainer.hpp"
#include "eden/version.hpp"

namespace fs = std::filesystem;
using namespace eden;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

/// Every run drops a manifest beside its outputs: command, effective flag
/// values, seed, version. Identical manifests must reproduce identical
/// output files.
struct Manifest {
  std::string command;
  KvFile kv;

  explicit Manifest(std::string cmd) : command(std::move(cmd)) {
    kv.set("command", command);
    kv.set("version", kVersion);
  }
  void flag(const std::string& name, const std::string& value) { kv.set("flag." + name, value); }
  void flag(const std::string& name, long long value) { kv.set_int("flag." + name, value); }
  void seed(std::uint64_t s) { kv.set_int("seed", static_cast<long long>(s)); }
  void write(const fs::path& out_dir) const { kv.save((out_dir / "manifest.txt").string()); }
};

fs::path ensure_out_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

model::ModelConfig model_config_from_kv(const KvFile& kv, int n_events) {
  model::ModelConfig cfg;
  cfg.vocab_size = data::Vocabulary::standard().size();
  cfg.n_events = n_events;
  cfg.n_emb = static_cast<int>(kv.get_int("n_emb", cfg.n_emb));
  cfg.n_hidden = static_cast<int>(kv.get_int("n_hidden", cfg.n_hidden));
  cfg.fc_size = static_cast<int>(kv.get_int("fc_size", cfg.fc_size));
  cfg.dropout_rate = kv.get_double("dropout_rate", cfg.dropout_rate);
  cfg.validate();
  return cfg;
}

std::vector<double> load_thresholds(const std::string& path,
                                    const std::vector<std::string>& event_names) {
  const KvFile kv = KvFile::load(path);
  std::vector<double> t;
  for (const auto& name : event_names) t.push_back(kv.get_double(name, 0.5));
  return t;
}

std::string thresholds_text(const std::vector<double>& thresholds,
                            const std::vector<std::string>& event_names) {
  KvFile kv;
  for (size_t s = 0; s < event_names.size(); ++s) kv.set_double(event_names[s], thresholds[s]);
  return kv.serialize();
}

metrics::MetricsReport report_for_predictions(const data::Cohort& cohort,
                                              const std::vector<metrics::TypedPredictions>& preds,
                                              const std::vector<std::vector<metrics::StepFunction>>& steps,
                                              const std::vector<double>& thresholds) {
  return metrics::build_report(cohort, preds, steps, thresholds);
}

/// Ad-hoc rule predictions shaped like model predictions; the event-rate
/// step function is the 0->1 step at the predicted day.
trainer::ModelPredictions adhoc_predictions(const data::Cohort& cohort) {
  const auto rules = baselines::AdhocRuleSet::standard();
  trainer::ModelPredictions out;
  out.per_type.resize(cohort.n_events());
  out.rate_steps.resize(cohort.patients.size());
  for (size_t i = 0; i < cohort.patients.size(); ++i) {
    const auto& rec = cohort.patients[i];
    const auto preds = baselines::adhoc_predict(rec, rules);
    std::vector<long> days;
    for (const auto& v : rec.visits) days.push_back(v.tau);
    out.rate_steps[i].resize(cohort.n_events());
    for (int s = 0; s < cohort.n_events(); ++s) {
      out.per_type[s].scores.push_back(preds[s].score);
      out.per_type[s].decisions.push_back(preds[s].decision);
      out.per_type[s].predicted_day.push_back(preds[s].time.value_or(0));
      std::vector<double> w(days.size(), 0.0);
      if (preds[s].decision) {
        for (size_t j = 0; j < days.size(); ++j)
          if (days[j] >= *preds[s].time) w[j] = 1.0;
      }
      out.rate_steps[i][s] = metrics::StepFunction{days, std::move(w)};
    }
  }
  return out;
}

int run_generate(const std::string& spec_path, const std::string& out,
                 std::optional<long long> seed) {
  data::GeneratorSpec spec;
  if (!spec_path.empty()) spec = data::GeneratorSpec::from_file(spec_path);
  if (seed) spec.seed = static_cast<std::uint64_t>(*seed);
  spec.validate();
  const fs::path dir = ensure_out_dir(out);

  const data::Cohort all = data::generate_cohort(spec);
  const size_t n = all.patients.size();
  const size_t n_val = n / 5, n_test = n / 5;  // 3:1:1 train/val/test
  const size_t n_train = n - n_val - n_test;
  data::Cohort train, val, test;
  train.event_names = val.event_names = test.event_names = all.event_names;
  for (size_t i = 0; i < n; ++i) {
    auto& dst = i < n_train ? train : (i < n_train + n_val ? val : test);
    dst.patients.push_back(all.patients[i]);
  }
  data::write_cohort(train, (dir / "train.cohort").string());
  data::write_cohort(val, (dir / "val.cohort").string());
  data::write_cohort(test, (dir / "test.cohort").string());

  std::string stats;
  for (const auto& [name, c] :
       {std::pair<const char*, const data::Cohort*>{"train", &train}, {"val", &val}, {"test", &test}}) {
    stats += std::string("[") + name + "]\n";
    stats += data::format_stats(data::compute_stats(*c), c->event_names);
    stats += "\n";
  }
  write_text(dir / "stats.txt", stats);

  Manifest m("generate");
  m.flag("spec", spec_path.empty() ? "<default>" : spec_path);
  m.flag("out", out);
  for (const auto& key : spec.to_kv().keys()) m.flag("spec." + key, spec.to_kv().get(key));
  m.seed(spec.seed);
  m.write(dir);
  std::cout << "wrote " << n_train << "/" << n_val << "/" << n_test
            << " patients to " << dir.string() << "\n";
  return 0;
}

int run_train(const std::string& data_dir, const std::string& config_path, const std::string& out,
              std::optional<long long> seed) {
  KvFile kv;
  if (!config_path.empty()) kv = KvFile::load(config_path);
  trainer::TrainConfig tcfg = trainer::TrainConfig::from_kv(kv);
  if (!kv.has("epochs")) tcfg.epochs = 100;  // desk-scale default
  if (seed) tcfg.seed = static_cast<std::uint64_t>(*seed);

  const data::Cohort train_set = data::read_cohort((fs::path(data_dir) / "train.cohort").string());
  const data::Cohort val_set = data::read_cohort((fs::path(data_dir) / "val.cohort").string());
  const model::ModelConfig mcfg = model_config_from_kv(kv, train_set.n_events());

  const fs::path dir = ensure_out_dir(out);
  const trainer::TrainResult result = trainer::train(mcfg, train_set, val_set, tcfg);

  result.best.save((dir / "model.ckpt").string());
  write_text(dir / "training_log.csv", trainer::training_log_csv(result.log, train_set.event_names));
  write_text(dir / "thresholds.txt", thresholds_text(result.thresholds, train_set.event_names));

  Manifest m("train");
  m.flag("data", data_dir);
  m.flag("config", config_path.empty() ? "<default>" : config_path);
  m.flag("out", out);
  const KvFile eff = tcfg.to_kv();
  for (const auto& key : eff.keys()) m.flag("config." + key, eff.get(key));
  m.flag("config.n_emb", mcfg.n_emb);
  m.flag("config.n_hidden", mcfg.n_hidden);
  m.flag("config.fc_size", mcfg.fc_size);
  m.flag("config.epochs_effective", tcfg.epochs);
  m.seed(tcfg.seed);
  m.write(dir);
  std::cout << "best epoch " << result.best_epoch << " (val macro-F1), checkpoint written to "
            << (dir / "model.ckpt").string() << "\n";
  return 0;
}

int run_evaluate(const std::string& data_path, const std::string& model_path,
                 const std::string& thresholds_path, const std::string& baselines_list,
                 const std::string& lstm_model, const std::string& lstm_thresholds,
                 const std::string& cohort_name, const std::string& out,
                 std::optional<long long> seed) {
  const data::Cohort cohort = data::read_cohort(data_path);
  const fs::path dir = ensure_out_dir(out);
  const std::string cname =
      cohort_name.empty() ? fs::path(data_path).stem().string() : cohort_name;

  std::string csv = metrics::metrics_csv_header();

  const model::Model m = model::Model::load(model_path);
  const std::vector<double> thresholds =
      thresholds_path.empty() ? std::vector<double>(cohort.n_events(), 0.5)
                              : load_thresholds(thresholds_path, cohort.event_names);
  const trainer::ModelPredictions preds = trainer::predict_cohort(m, cohort, thresholds);
  const auto report = report_for_predictions(cohort, preds.per_type, preds.rate_steps, thresholds);
  csv += metrics::metrics_csv("eden", cname, report);
  write_text(dir / "km_eden.csv", metrics::km_csv(cohort, preds.per_type));
  write_text(dir / "predictions_eden.csv", metrics::predictions_csv(cohort, preds.per_type));
  for (int s = 0; s < cohort.n_events(); ++s)
    if (report.per_type[s].concordance)
      std::cout << "eden raw concordance " << cohort.event_names[s] << " = "
                << *report.per_type[s].concordance << "\n";

  for (const auto& b : [&] {
         std::vector<std::string> out_list;
         std::string cur;
         for (char c : baselines_list) {
           if (c == ',') {
             if (!cur.empty()) out_list.push_back(cur);
             cur.clear();
           } else
             cur += c;
         }
         if (!cur.empty()) out_list.push_back(cur);
         return out_list;
       }()) {
    if (b == "adhoc") {
      const trainer::ModelPredictions ap = adhoc_predictions(cohort);
      const std::vector<double> t(cohort.n_events(), 0.5);
      csv += metrics::metrics_csv("adhoc", cname,
                                  report_for_predictions(cohort, ap.per_type, ap.rate_steps, t));
      write_text(dir / "km_adhoc.csv", metrics::km_csv(cohort, ap.per_type));
      write_text(dir / "predictions_adhoc.csv", metrics::predictions_csv(cohort, ap.per_type));
    } else if (b == "lstm") {
      if (lstm_model.empty())
        throw std::runtime_error("--baselines lstm requires --lstm-model CKPT");
      const model::Model lm = model::Model::load(lstm_model);
      const std::vector<double> lt =
          lstm_thresholds.empty() ? std::vector<double>(cohort.n_events(), 0.5)
                                  : load_thresholds(lstm_thresholds, cohort.event_names);
      const trainer::ModelPredictions lp = trainer::predict_cohort(lm, cohort, lt);
      csv += metrics::metrics_csv("lstm", cname,
                                  report_for_predictions(cohort, lp.per_type, lp.rate_steps, lt));
      write_text(dir / "km_lstm.csv", metrics::km_csv(cohort, lp.per_type));
      write_text(dir / "predictions_lstm.csv", metrics::predictions_csv(cohort, lp.per_type));
    } else {
      throw std::runtime_error("unknown baseline: " + b + " (expected adhoc and/or lstm)");
    }
  }
  write_text(dir / "metrics.csv", csv);

  Manifest man("evaluate");
  man.flag("data", data_path);
  man.flag("model", model_path);
  man.flag("thresholds", thresholds_path);
  man.flag("baselines", baselines_list);
  man.flag("cohort-name", cname);
  man.flag("out", out);
  man.seed(seed ? static_cast<std::uint64_t>(*seed) : 0);
  man.write(dir);
  std::cout << "metrics written to " << (dir / "metrics.csv").string() << "\n";
  return 0;
}

int run_predict(const std::string& data_path, const std::string& model_path,
                const std::string& thresholds_path, const std::string& out,
                std::optional<long long> seed) {
  const data::Cohort cohort = data::read_cohort(data_path);
  const model::Model m = model::Model::load(model_path);
  const std::vector<double> thresholds =
      thresholds_path.empty() ? std::vector<double>(cohort.n_events(), 0.5)
                              : load_thresholds(thresholds_path, cohort.event_names);
  const fs::path dir = ensure_out_dir(out);
  const trainer::ModelPredictions preds = trainer::predict_cohort(m, cohort, thresholds);
  write_text(dir / "predictions.csv", metrics::predictions_csv(cohort, preds.per_type));

  Manifest man("predict");
  man.flag("data", data_path);
  man.flag("model", model_path);
  man.flag("thresholds", thresholds_path);
  man.flag("out", out);
  man.seed(seed ? static_cast<std::uint64_t>(*seed) : 0);
  man.write(dir);
  std::cout << "predictions written to " << (dir / "predictions.csv").string() << "\n";
  return 0;
}

int run_ablate(const std::string& data_dir, const std::string& config_path, const std::string& out,
               std::optional<long long> seed) {
  KvFile kv;
  if (!config_path.empty()) kv = KvFile::load(config_path);
  trainer::TrainConfig tcfg = trainer::TrainConfig::from_kv(kv);
  if (!kv.has("epochs")) tcfg.epochs = 100;
  if (seed) tcfg.seed = static_cast<std::uint64_t>(*seed);

  const data::Cohort train_set = data::read_cohort((fs::path(data_dir) / "train.cohort").string());
  const data::Cohort val_set = data::read_cohort((fs::path(data_dir) / "val.cohort").string());
  const data::Cohort test_set = data::read_cohort((fs::path(data_dir) / "test.cohort").string());
  const model::ModelConfig mcfg = model_config_from_kv(kv, train_set.n_events());

  const fs::path dir = ensure_out_dir(out);
  const auto rows = trainer::ablation_suite(mcfg, train_set, val_set, test_set, tcfg);
  write_text(dir / "ablation.csv", trainer::ablation_csv(rows, train_set.event_names));

  Manifest man("ablate");
  man.flag("data", data_dir);
  man.flag("config", config_path.empty() ? "<default>" : config_path);
  man.flag("out", out);
  man.seed(tcfg.seed);
  man.write(dir);
  std::cout << "ablation table written to " << (dir / "ablation.csv").string() << "\n";
  return 0;
}

int run_search(const std::string& data_dir, const std::string& config_path, const std::string& out,
               std::optional<long long> seed) {
  KvFile kv;
  if (!config_path.empty()) kv = KvFile::load(config_path);
  trainer::TrainConfig tcfg = trainer::TrainConfig::from_kv(kv);
  if (seed) tcfg.seed = static_cast<std::uint64_t>(*seed);
  trainer::SearchSpace space;
  space.trials = static_cast<int>(kv.get_int("trials", space.trials));
  space.search_epochs = static_cast<int>(kv.get_int("search_epochs", space.search_epochs));

  const data::Cohort train_set = data::read_cohort((fs::path(data_dir) / "train.cohort").string());
  const data::Cohort val_set = data::read_cohort((fs::path(data_dir) / "val.cohort").string());
  model::ModelConfig base;
  base.vocab_size = data::Vocabulary::standard().size();
  base.n_events = train_set.n_events();

  const fs::path dir = ensure_out_dir(out);
  Rng rng = Rng::substream(tcfg.seed, "search");
  const auto outcome = trainer::random_search(space, base, train_set, val_set, tcfg, rng);

  KvFile best;
  best.set_int("n_emb", outcome.best.n_emb);
  best.set_int("n_hidden", outcome.best.n_hidden);
  best.set_int("fc_size", outcome.best.fc_size);
  best.set_double("dropout_rate", outcome.best.dropout_rate);
  best.save((dir / "best_config.txt").string());

  std::string log = "trial,n_emb,n_hidden,fc_size,dropout_rate,val_macro_F1\n";
  for (size_t i = 0; i < outcome.tried.size(); ++i) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu,%d,%d,%d,%g,%.6f\n", i + 1, outcome.tried[i].n_emb,
                  outcome.tried[i].n_hidden, outcome.tried[i].fc_size,
                  outcome.tried[i].dropout_rate, outcome.macro_f1[i]);
    log += buf;
  }
  write_text(dir / "search_log.csv", log);

  Manifest man("search");
  man.flag("data", data_dir);
  man.flag("config", config_path.empty() ? "<default>" : config_path);
  man.flag("out", out);
  man.flag("trials", space.trials);
  man.flag("search_epochs", space.search_epochs);
  man.seed(tcfg.seed);
  man.write(dir);
  std::cout << "best configuration written to " << (dir / "best_config.txt").string() << "\n";
  return 0;
}

int run_interpret(const std::string& data_path, const std::string& model_path, int top_k,
                  const std::string& out, std::optional<long long> seed) {
  const data::Cohort cohort = data::read_cohort(data_path);
  const model::Model m = model::Model::load(model_path);
  const fs::path dir = ensure_out_dir(out);
  const std::vector<double> dummy(cohort.n_events(), 0.5);
  const trainer::ModelPredictions preds = trainer::predict_cohort(m, cohort, dummy);
  const auto impacts = metrics::code_impact(cohort, preds.rate_steps);
  const auto top = metrics::top_code_impacts(impacts, top_k);
  write_text(dir / "code_impact.csv", metrics::code_impact_csv(top, cohort.event_names));

  Manifest man("interpret");
  man.flag("data", data_path);
  man.flag("model", model_path);
  man.flag("top", top_k);
  man.flag("out", out);
  man.seed(seed ? static_cast<std::uint64_t>(*seed) : 0);
  man.write(dir);
  std::cout << "code impact table written to " << (dir / "code_impact.csv").string() << "\n";
  return 0;
}

int run_stats(const std::string& data_path, const std::string& out,
              std::optional<long long> seed) {
  const data::Cohort cohort = data::read_cohort(data_path);
  const std::string text = data::format_stats(data::compute_stats(cohort), cohort.event_names);
  std::cout << text;
  if (!out.empty()) {
    const fs::path dir = ensure_out_dir(out);
    write_text(dir / "stats.txt", text);
    Manifest man("stats");
    man.flag("data", data_path);
    man.flag("out", out);
    man.seed(seed ? static_cast<std::uint64_t>(*seed) : 0);
    man.write(dir);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"survival-event detection in right-censored medical code sequences"};
  app.require_subcommand(1);

  std::string spec_path, data_path, config_path, out, model_path, thresholds_path;
  std::string baselines_list, lstm_model, lstm_thresholds, cohort_name;
  std::optional<long long> seed;
  int top_k = 20;

  auto* gen = app.add_subcommand("generate", "generate a synthetic cohort (train/val/test)");
  gen->add_option("--spec", spec_path, "generator spec file (key = value)");
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--seed", seed, "seed override");

  auto* tr = app.add_subcommand("train", "train the detection model");
  tr->add_option("--data", data_path, "directory with train.cohort and val.cohort")->required();
  tr->add_option("--config", config_path, "training config file");
  tr->add_option("--out", out, "output directory")->required();
  tr->add_option("--seed", seed, "seed override");

  auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint (and baselines) on a cohort");
  ev->add_option("--data", data_path, "cohort file")->required();
  ev->add_option("--model", model_path, "model checkpoint")->required();
  ev->add_option("--thresholds", thresholds_path, "thresholds file from train");
  ev->add_option("--baselines", baselines_list, "comma list: adhoc,lstm");
  ev->add_option("--lstm-model", lstm_model, "plain LSTM checkpoint for --baselines lstm");
  ev->add_option("--lstm-thresholds", lstm_thresholds, "thresholds for the LSTM baseline");
  ev->add_option("--cohort-name", cohort_name, "cohort label in the metrics CSV");
  ev->add_option("--out", out, "output directory")->required();
  ev->add_option("--seed", seed, "recorded in the manifest");

  auto* pr = app.add_subcommand("predict", "write per-patient predictions for a cohort");
  pr->add_option("--data", data_path, "cohort file")->required();
  pr->add_option("--model", model_path, "model checkpoint")->required();
  pr->add_option("--thresholds", thresholds_path, "thresholds file");
  pr->add_option("--out", out, "output directory")->required();
  pr->add_option("--seed", seed, "recorded in the manifest");

  auto* ab = app.add_subcommand("ablate", "train and evaluate the architecture/loss variants");
  ab->add_option("--data", data_path, "directory with train/val/test cohorts")->required();
  ab->add_option("--config", config_path, "training config file");
  ab->add_option("--out", out, "output directory")->required();
  ab->add_option("--seed", seed, "seed override");

  auto* se = app.add_subcommand("search", "random hyper-parameter search");
  se->add_option("--data", data_path, "directory with train/val cohorts")->required();
  se->add_option("--config", config_path, "config with trials / search_epochs");
  se->add_option("--out", out, "output directory")->required();
  se->add_option("--seed", seed, "seed override");

  auto* in = app.add_subcommand("interpret", "per-code impact on the event-rate output");
  in->add_option("--data", data_path, "cohort file")->required();
  in->add_option("--model", model_path, "model checkpoint")->required();
  in->add_option("--top", top_k, "codes per event type (default 20)");
  in->add_option("--out", out, "output directory")->required();
  in->add_option("--seed", seed, "recorded in the manifest");

  auto* st = app.add_subcommand("stats", "cohort statistics");
  st->add_option("--data", data_path, "cohort file")->required();
  st->add_option("--out", out, "optional output directory");
  st->add_option("--seed", seed, "recorded in the manifest");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_generate(spec_path, out, seed);
    if (tr->parsed()) return run_train(data_path, config_path, out, seed);
    if (ev->parsed())
      return run_evaluate(data_path, model_path, thresholds_path, baselines_list, lstm_model,
                          lstm_thresholds, cohort_name, out, seed);
    if (pr->parsed()) return run_predict(data_path, model_path, thresholds_path, out, seed);
    if (ab->parsed()) return run_ablate(data_path, config_path, out, seed);
    if (se->parsed()) return run_search(data_path, config_path, out, seed);
    if (in->parsed()) return run_interpret(data_path, model_path, top_k, out, seed);
    if (st->parsed()) return run_stats(data_path, out, seed);
  } catch (const std::exception& e) {
    std::cerr << "eden: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
