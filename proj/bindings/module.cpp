// Python bindings for the survival-event detection toolkit: cohort
// generation and I/O, model training/inference, and the evaluation metrics.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "eden/baselines.hpp"
#include "eden/generator.hpp"
#include "eden/loss.hpp"
#include "eden/metrics.hpp"
#include "eden/model.hpp"
#include "eden/records.hpp"
#include "eden/survival.hpp"
#include "eden/trainer.hpp"
#include "eden/version.hpp"

namespace py = pybind11;
using namespace eden;

namespace {

KvFile kv_from_dict(const py::dict& d) {
  KvFile kv;
  for (const auto& item : d) {
    const std::string key = py::cast<std::string>(item.first);
    const py::handle v = item.second;
    if (py::isinstance<py::bool_>(v))
      kv.set_bool(key, py::cast<bool>(v));
    else if (py::isinstance<py::int_>(v))
      kv.set_int(key, py::cast<long long>(v));
    else if (py::isinstance<py::float_>(v))
      kv.set_double(key, py::cast<double>(v));
    else
      kv.set(key, py::cast<std::string>(py::str(v)));
  }
  return kv;
}

data::GeneratorSpec spec_from_dict(const py::dict& d) {
  return data::GeneratorSpec::from_kv(kv_from_dict(d));
}

struct PyModel {
  model::Model m;
  std::vector<double> thresholds;
  std::vector<std::string> event_names;

  py::dict predict(const data::Cohort& cohort) const {
    const trainer::ModelPredictions preds = trainer::predict_cohort(m, cohort, thresholds);
    py::dict out;
    for (int s = 0; s < cohort.n_events(); ++s) {
      py::dict typed;
      typed["scores"] = preds.per_type[s].scores;
      typed["decisions"] = preds.per_type[s].decisions;
      typed["predicted_day"] = preds.per_type[s].predicted_day;
      out[py::str(cohort.event_names[s])] = typed;
    }
    return out;
  }

  py::dict evaluate(const data::Cohort& cohort) const {
    const trainer::ModelPredictions preds = trainer::predict_cohort(m, cohort, thresholds);
    const metrics::MetricsReport report =
        metrics::build_report(cohort, preds.per_type, preds.rate_steps, thresholds);
    py::dict out;
    for (size_t s = 0; s < report.per_type.size(); ++s) {
      const auto& t = report.per_type[s];
      py::dict row;
      if (t.auc) row["auc"] = *t.auc;
      row["accuracy"] = t.accuracy;
      row["f1"] = t.f1;
      if (t.delta_t_days) row["delta_t"] = *t.delta_t_days;
      row["brier"] = t.brier;
      if (t.c_error) row["c_error"] = *t.c_error;
      row["threshold"] = t.threshold;
      out[py::str(report.event_names[s])] = row;
    }
    return out;
  }

  std::vector<std::vector<double>> event_rates(const data::Cohort& cohort, size_t index) const {
    return m.event_rates(cohort.patients.at(index));
  }
};

PyModel train_py(const data::Cohort& train_set, const data::Cohort& val_set,
                 const py::dict& config) {
  const KvFile kv = kv_from_dict(config);
  trainer::TrainConfig tcfg = trainer::TrainConfig::from_kv(kv);
  if (!kv.has("epochs")) tcfg.epochs = 100;
  model::ModelConfig mcfg;
  mcfg.vocab_size = data::Vocabulary::standard().size();
  mcfg.n_events = train_set.n_events();
  mcfg.n_emb = static_cast<int>(kv.get_int("n_emb", mcfg.n_emb));
  mcfg.n_hidden = static_cast<int>(kv.get_int("n_hidden", mcfg.n_hidden));
  mcfg.fc_size = static_cast<int>(kv.get_int("fc_size", mcfg.fc_size));
  mcfg.dropout_rate = kv.get_double("dropout_rate", mcfg.dropout_rate);
  const trainer::TrainResult r = trainer::train(mcfg, train_set, val_set, tcfg);
  return PyModel{r.best, r.thresholds, train_set.event_names};
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "survival-event detection in right-censored medical code sequences";
  mod.attr("__version__") = kVersion;

  py::class_<data::Cohort>(mod, "Cohort")
      .def("__len__", [](const data::Cohort& c) { return c.patients.size(); })
      .def_property_readonly("event_names",
                             [](const data::Cohort& c) { return c.event_names; })
      .def("save", [](const data::Cohort& c, const std::string& path) { data::write_cohort(c, path); })
      .def("stats",
           [](const data::Cohort& c) {
             const data::CohortStats s = data::compute_stats(c);
             py::dict d;
             d["patients"] = s.patients;
             d["visits_per_patient"] = s.visits_per_patient;
             d["codes_per_visit"] = s.codes_per_visit;
             d["censoring_rate"] = s.censoring_rate;
             d["time_to_censor"] = s.time_to_censor;
             d["event_rate"] = s.event_rate;
             d["time_to_event"] = s.time_to_event;
             return d;
           })
      .def("patient",
           [](const data::Cohort& c, size_t i) {
             const auto& p = c.patients.at(i);
             py::dict d;
             d["id"] = p.id;
             std::vector<std::pair<long, std::vector<std::string>>> visits;
             const auto& vocab = data::Vocabulary::standard();
             for (const auto& v : p.visits) {
               std::vector<std::string> codes;
               for (int code : v.codes) codes.push_back(vocab.name(code));
               visits.emplace_back(v.tau, codes);
             }
             d["visits"] = visits;
             py::dict labels;
             for (int s = 0; s < c.n_events(); ++s)
               labels[py::str(c.event_names[s])] =
                   py::make_tuple(p.labels[s].observed, p.labels[s].time);
             d["labels"] = labels;
             return d;
           })
      .def("slice", [](const data::Cohort& c, size_t begin, size_t end) {
        data::Cohort out;
        out.event_names = c.event_names;
        for (size_t i = begin; i < end && i < c.patients.size(); ++i)
          out.patients.push_back(c.patients[i]);
        return out;
      });

  mod.def("generate_cohort",
          [](const py::dict& spec) { return data::generate_cohort(spec_from_dict(spec)); },
          py::arg("spec"));
  mod.def("read_cohort", &data::read_cohort, py::arg("path"));

  mod.def("discount", &model::discount, py::arg("delta_days"),
          "memory discount 1/log(e + delta)");
  mod.def("chain_rule", &survival::chain_rule, py::arg("hazards"),
          "cumulative event rate from per-visit hazards");
  mod.def("hazards_from_event_rate", &survival::hazards_from_event_rate, py::arg("event_rate"));
  mod.def(
      "extract_prediction",
      [](const std::vector<double>& w, const std::vector<long>& days, double threshold) {
        const survival::Prediction p = survival::extract_prediction(w, days, threshold);
        py::dict d;
        d["score"] = p.score;
        d["decision"] = p.decision;
        if (p.time) d["time"] = *p.time;
        return d;
      },
      py::arg("event_rate"), py::arg("visit_days"), py::arg("threshold"));

  mod.def(
      "merge_consecutive",
      [](const std::vector<std::pair<long, std::vector<std::string>>>& visits) {
        const auto& vocab = data::Vocabulary::standard();
        std::vector<data::Visit> in;
        for (const auto& [tau, codes] : visits) {
          data::Visit v;
          v.tau = tau;
          for (const auto& c : codes) v.codes.push_back(vocab.require(c));
          std::sort(v.codes.begin(), v.codes.end());
          in.push_back(std::move(v));
        }
        std::vector<std::pair<long, std::vector<std::string>>> out;
        for (const auto& v : data::merge_consecutive(in)) {
          std::vector<std::string> codes;
          for (int c : v.codes) codes.push_back(vocab.name(c));
          out.emplace_back(v.tau, codes);
        }
        return out;
      },
      py::arg("visits"));

  mod.def("vocabulary", [] {
    const auto& vocab = data::Vocabulary::standard();
    std::vector<std::string> names;
    for (int i = 0; i < vocab.size(); ++i) names.push_back(vocab.name(i));
    return names;
  });

  mod.def("auc", &metrics::auc, py::arg("scores"), py::arg("truths"));
  mod.def("f1_acc", &metrics::f1_acc, py::arg("decisions"), py::arg("truths"));
  mod.def(
      "kaplan_meier",
      [](const std::vector<bool>& observed, const std::vector<long>& times) {
        const metrics::KMCurve c = metrics::kaplan_meier(observed, times);
        return py::make_tuple(c.times, c.survival);
      },
      py::arg("observed"), py::arg("times"));

  mod.def("adhoc_predict", [](const data::Cohort& cohort) {
    const auto rules = baselines::AdhocRuleSet::standard();
    py::dict out;
    for (int s = 0; s < cohort.n_events(); ++s) {
      py::list scores, decisions, days;
      for (const auto& p : cohort.patients) {
        const auto preds = baselines::adhoc_predict(p, rules);
        scores.append(preds[s].score);
        decisions.append(preds[s].decision);
        days.append(preds[s].time.value_or(-1));
      }
      py::dict typed;
      typed["scores"] = scores;
      typed["decisions"] = decisions;
      typed["predicted_day"] = days;
      out[py::str(cohort.event_names[s])] = typed;
    }
    return out;
  });

  py::class_<PyModel>(mod, "Model")
      .def_property_readonly("thresholds", [](const PyModel& m) { return m.thresholds; })
      .def_property_readonly("event_names", [](const PyModel& m) { return m.event_names; })
      .def("predict", &PyModel::predict, py::arg("cohort"))
      .def("evaluate", &PyModel::evaluate, py::arg("cohort"))
      .def("event_rates", &PyModel::event_rates, py::arg("cohort"), py::arg("index"))
      .def("save", [](const PyModel& m, const std::string& path) { m.m.save(path); });

  mod.def("train", &train_py, py::arg("train_set"), py::arg("val_set"), py::arg("config"));
  mod.def(
      "load_model",
      [](const std::string& path, const std::vector<double>& thresholds) {
        PyModel pm{model::Model::load(path), thresholds, data::default_event_names()};
        return pm;
      },
      py::arg("path"), py::arg("thresholds"));
}
