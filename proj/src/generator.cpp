#include "eden/generator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace eden::data {

namespace {

constexpr int kLoco = 0;
constexpr int kMeta = 1;
constexpr int kSecond = 2;

const std::vector<std::string>& spec_keys() {
  static const std::vector<std::string> keys = {
      "patients",       "rate_locoregional",      "rate_metastatic",
      "rate_second_cancer", "censoring_rate",     "noise_rate",
      "mean_time_locoregional", "mean_time_metastatic", "mean_time_second_cancer",
      "mean_time_censor", "seed"};
  return keys;
}

}  // namespace

GeneratorSpec GeneratorSpec::from_kv(const KvFile& kv) {
  kv.require_known_keys(spec_keys());
  GeneratorSpec s;
  s.patients = static_cast<int>(kv.get_int("patients", s.patients));
  s.rate_locoregional = kv.get_double("rate_locoregional", s.rate_locoregional);
  s.rate_metastatic = kv.get_double("rate_metastatic", s.rate_metastatic);
  s.rate_second_cancer = kv.get_double("rate_second_cancer", s.rate_second_cancer);
  s.censoring_rate = kv.get_double("censoring_rate", s.censoring_rate);
  s.noise_rate = kv.get_double("noise_rate", s.noise_rate);
  s.mean_time_locoregional = kv.get_double("mean_time_locoregional", s.mean_time_locoregional);
  s.mean_time_metastatic = kv.get_double("mean_time_metastatic", s.mean_time_metastatic);
  s.mean_time_second_cancer = kv.get_double("mean_time_second_cancer", s.mean_time_second_cancer);
  s.mean_time_censor = kv.get_double("mean_time_censor", s.mean_time_censor);
  s.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(s.seed)));
  s.validate();
  return s;
}

GeneratorSpec GeneratorSpec::from_file(const std::string& path) {
  return from_kv(KvFile::load(path));
}

KvFile GeneratorSpec::to_kv() const {
  KvFile kv;
  kv.set_int("patients", patients);
  kv.set_double("rate_locoregional", rate_locoregional);
  kv.set_double("rate_metastatic", rate_metastatic);
  kv.set_double("rate_second_cancer", rate_second_cancer);
  kv.set_double("censoring_rate", censoring_rate);
  kv.set_double("noise_rate", noise_rate);
  kv.set_double("mean_time_locoregional", mean_time_locoregional);
  kv.set_double("mean_time_metastatic", mean_time_metastatic);
  kv.set_double("mean_time_second_cancer", mean_time_second_cancer);
  kv.set_double("mean_time_censor", mean_time_censor);
  kv.set_int("seed", static_cast<long long>(seed));
  return kv;
}

void GeneratorSpec::validate() const {
  auto bad = [](const std::string& why) { throw std::runtime_error("infeasible generator spec: " + why); };
  if (patients < 1) bad("patients must be >= 1");
  const double rates[] = {rate_locoregional, rate_metastatic, rate_second_cancer};
  double total = 0.0;
  for (double r : rates) {
    if (r < 0.0 || r >= 1.0) bad("event rates must lie in [0, 1)");
    total += r;
  }
  if (censoring_rate <= 0.0 || censoring_rate >= 1.0) bad("censoring_rate must lie in (0, 1)");
  if (std::fabs(censoring_rate + total - 1.0) > 0.05)
    bad("event rates and censoring rate must sum to 1 within 0.05");
  if (noise_rate < 0.0 || noise_rate > 1.0) bad("noise_rate must lie in [0, 1]");
  for (double m : {mean_time_locoregional, mean_time_metastatic, mean_time_second_cancer,
                   mean_time_censor})
    if (m < 200.0 || m > 10000.0) bad("mean times must lie in [200, 10000] days");
  conditional_event_probs(*this);  // throws if the conditional system has no solution
}

std::vector<double> conditional_event_probs(const GeneratorSpec& spec) {
  // Want marginals P(Y_s=1) = rate_s with P(no event) = censoring_rate.
  // Uncensored patients draw Y_s ~ Bernoulli(q_s) conditioned on >= 1 event:
  // q_s = a_s * Z with a_s = rate_s / (1 - c) and Z = 1 - prod(1 - q_t),
  // solved for Z by bisection (f is concave with f(0) = 0).
  const double c = spec.censoring_rate;
  const std::vector<double> a = {spec.rate_locoregional / (1.0 - c),
                                 spec.rate_metastatic / (1.0 - c),
                                 spec.rate_second_cancer / (1.0 - c)};
  double asum = 0.0;
  for (double x : a) asum += x;
  if (asum <= 1.0 + 1e-12)
    throw std::runtime_error("infeasible generator spec: event rates too low for censoring target");
  auto f = [&](double z) {
    double prod = 1.0;
    for (double x : a) prod *= 1.0 - std::min(1.0, x * z);
    return 1.0 - prod - z;
  };
  double lo = 1e-12, hi = 1.0;
  if (f(hi) > 0.0) {
    // a_s >= 1 for some s; Z = 1 works only in the limit
    throw std::runtime_error("infeasible generator spec: a per-type rate exceeds the uncensored mass");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  const double z = 0.5 * (lo + hi);
  std::vector<double> q;
  for (double x : a) {
    const double qs = x * z;
    if (qs <= 0.0 || qs >= 1.0)
      throw std::runtime_error("infeasible generator spec: conditional event probability out of range");
    q.push_back(qs);
  }
  return q;
}

namespace {

/// Builder that unions codes per day; days are merged and fixed up at the end.
class PathwayBuilder {
 public:
  explicit PathwayBuilder(const Vocabulary& vocab) : vocab_(vocab) {}

  void add(long day, std::initializer_list<const char*> names) {
    auto& s = days_[day];
    for (const char* n : names) s.insert(vocab_.require(n));
  }
  void add(long day, const std::vector<int>& codes) {
    auto& s = days_[day];
    s.insert(codes.begin(), codes.end());
  }
  bool has_day(long day) const { return days_.count(day) != 0; }

  std::vector<Visit> finish(long last_day) const {
    std::vector<Visit> visits;
    for (const auto& [day, codes] : days_) {
      if (day > last_day) continue;
      Visit v;
      v.tau = day;
      v.codes.assign(codes.begin(), codes.end());
      visits.push_back(std::move(v));
    }
    return visits;
  }

  std::map<long, std::set<int>>& days() { return days_; }

 private:
  const Vocabulary& vocab_;
  std::map<long, std::set<int>> days_;
};

const char* kGenericChemoDrugs[] = {"Docetaxel",   "Epirubicine",  "Cyclophosphamide",
                                    "Paclitaxel",  "Doxorubicine", "Fluorouracile",
                                    "Vinorelbine"};
const char* kHormoneDrugs[] = {"Tamoxifen", "Letrozole", "Anastrozole", "Exemestane"};
const char* kSurgeries[] = {"Mastectomy", "Lumpectomy", "Mastectomy/Axillary surgery",
                            "Lumpectomy/Axillary surgery"};

struct EventPlan {
  bool observed = false;
  long time = 0;       // label T_s
  bool omit = false;   // signature never emitted
  long signature_day = 0;
};

}  // namespace

Cohort generate_cohort(const GeneratorSpec& spec) {
  spec.validate();
  const Vocabulary& vocab = Vocabulary::standard();
  const std::vector<double> q = conditional_event_probs(spec);
  const double mean_time[3] = {spec.mean_time_locoregional, spec.mean_time_metastatic,
                               spec.mean_time_second_cancer};
  // locoregional relapses sit at least a year past the initial surgery
  const long min_day[3] = {400, 150, 150};

  Cohort cohort;
  cohort.event_names = default_event_names();
  cohort.patients.reserve(spec.patients);

  for (int pi = 0; pi < spec.patients; ++pi) {
    Rng rng = Rng::substream(spec.seed, "cohort", static_cast<std::uint64_t>(pi));

    // --- labels ---------------------------------------------------------
    EventPlan plan[3];
    const bool censored = rng.bernoulli(spec.censoring_rate);
    if (!censored) {
      bool any = false;
      while (!any) {
        for (int s = 0; s < 3; ++s) {
          plan[s].observed = rng.bernoulli(q[s]);
          any = any || plan[s].observed;
        }
      }
    }
    long max_event = 0;
    for (int s = 0; s < 3; ++s) {
      if (!plan[s].observed) continue;
      long t = std::lround(rng.gamma(3.0, mean_time[s] / 3.0));
      t = std::clamp(t, min_day[s], 4000L);
      plan[s].time = t;
      plan[s].signature_day = t;
      if (rng.bernoulli(spec.noise_rate)) {
        if (rng.bernoulli(0.5)) {
          plan[s].omit = true;
        } else {
          plan[s].signature_day = t + 40 + std::lround(rng.exponential(40.0));
        }
      }
      max_event = std::max(max_event, t);
    }
    long last_day;
    if (censored) {
      last_day = std::max(240L, std::lround(rng.gamma(4.0, spec.mean_time_censor / 4.0)));
    } else {
      last_day = max_event + 30 + std::lround(rng.exponential(350.0));
    }

    // --- baseline care pathway ------------------------------------------
    PathwayBuilder path(vocab);
    const char* initial_surgery = kSurgeries[rng.below(4)];
    path.add(0, {initial_surgery, "Breast Cancer"});

    long chemo_end = 0;
    if (rng.bernoulli(0.65)) {
      const int cycles = static_cast<int>(4 + 2 * rng.below(3));  // 4, 6 or 8
      const char* drug_a = kGenericChemoDrugs[rng.below(7)];
      const char* drug_b = kGenericChemoDrugs[rng.below(7)];
      long day = 21;
      for (int k = 0; k < cycles; ++k) {
        path.add(day, {"Chemotherapy", k % 2 == 0 ? drug_a : drug_b});
        chemo_end = day;
        day += 21 + static_cast<long>(rng.below(7));
      }
    }
    if (rng.bernoulli(0.8)) {
      long day = (chemo_end > 0 ? chemo_end + 20 : 45);
      for (int k = 0; k < 4; ++k) {
        path.add(day, {"Radiotherapy"});  // consecutive sessions merge, as in real claims
        day += 7;
      }
    }
    if (rng.bernoulli(0.7)) {
      const char* hormone = kHormoneDrugs[rng.below(4)];
      long day = 180 + static_cast<long>(rng.below(30));
      for (int k = 0; day < last_day; ++k) {
        if (k % 2 == 0)
          path.add(day, {hormone});
        else
          path.add(day, {hormone, "Breast Cancer"});
        day += 100 + static_cast<long>(rng.below(40));
      }
    }
    {
      long day = 150 + static_cast<long>(rng.below(60));
      while (day < last_day) {
        const double u = rng.uniform01();
        if (u < 0.55)
          path.add(day, {"Breast imaging"});
        else if (u < 0.85)
          path.add(day, {"Breast imaging", "Breast Cancer"});
        else
          path.add(day, {"Whole body imaging"});
        day += 200 + static_cast<long>(rng.below(260));
      }
    }

    // --- relapse signatures ----------------------------------------------
    if (plan[kLoco].observed && !plan[kLoco].omit) {
      const long d = plan[kLoco].signature_day;
      const char* surgery = kSurgeries[rng.below(4)];
      path.add(d, {surgery, "Breast biopsy"});
      const char* drug_a = kGenericChemoDrugs[rng.below(7)];
      const char* drug_b = kGenericChemoDrugs[rng.below(7)];
      long day = d + 20;
      for (int k = 0; k < 4; ++k) {
        path.add(day, {"Chemotherapy", k % 2 == 0 ? drug_a : drug_b});
        day += 21;
      }
    }
    if (plan[kMeta].observed && !plan[kMeta].omit) {
      const long d = plan[kMeta].signature_day;
      const auto& drugs = metastatic_only_drugs();
      const char* regimen = drugs[rng.below(drugs.size())].c_str();
      if (rng.bernoulli(0.8))
        path.add(d, {"Metastasis", regimen});
      else
        path.add(d, {"Metastasis"});
      long day = d + 28;
      const long stop = std::min(last_day, d + 330);
      for (int k = 0; day <= stop; ++k) {
        if (k % 2 == 0)
          path.add(day, {regimen});
        else
          path.add(day, {regimen, "Whole body imaging"});
        day += 28 + static_cast<long>(rng.below(10));
      }
      if (rng.bernoulli(0.15)) path.add(d + 200, {"Palliative care"});
    }
    if (plan[kSecond].observed && !plan[kSecond].omit) {
      const long d = plan[kSecond].signature_day;
      path.add(d, {"Other cancer"});
      const char* drug_a = kGenericChemoDrugs[rng.below(7)];
      const char* drug_b = kGenericChemoDrugs[rng.below(7)];
      long day = d + 20;
      for (int k = 0; k < 4; ++k) {
        path.add(day, {"Chemotherapy", k % 2 == 0 ? drug_a : drug_b});
        day += 21;
      }
      if (rng.bernoulli(0.5)) path.add(d + 90, {"Other cancer"});
    }

    // each observed event time must land on a visit, even when its signature
    // is omitted or delayed
    for (int s = 0; s < 3; ++s)
      if (plan[s].observed && !path.has_day(plan[s].time))
        path.add(plan[s].time, {"Breast imaging", "Breast Cancer"});
    if (!path.has_day(last_day)) path.add(last_day, {"Breast imaging"});

    // --- assemble ---------------------------------------------------------
    PatientRecord rec;
    {
      char idbuf[16];
      std::snprintf(idbuf, sizeof idbuf, "P%06d", pi);
      rec.id = idbuf;
    }
    std::vector<Visit> merged = merge_consecutive(path.finish(last_day));
    // merging may have swallowed a label day into an identical earlier visit;
    // break the run by enriching the label-day code set
    for (int attempt = 0; attempt < 4; ++attempt) {
      bool ok = true;
      for (int s = 0; s < 3; ++s) {
        if (!plan[s].observed) continue;
        const long t = plan[s].time;
        if (std::none_of(merged.begin(), merged.end(), [&](const Visit& v) { return v.tau == t; })) {
          static const char* extras[] = {"Breast cytology", "Node", "Node cytology"};
          path.add(t, {extras[attempt % 3]});
          ok = false;
        }
      }
      if (ok) break;
      merged = merge_consecutive(path.finish(last_day));
    }
    rec.visits = std::move(merged);

    rec.labels.resize(3);
    for (int s = 0; s < 3; ++s) {
      rec.labels[s].observed = plan[s].observed;
      rec.labels[s].time = plan[s].observed ? plan[s].time : rec.visits.back().tau;
    }
    validate_record(rec, 3, vocab.size());
    cohort.patients.push_back(std::move(rec));
  }
  return cohort;
}

}  // namespace eden::data
