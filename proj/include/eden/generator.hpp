#pragma once

#include <cstdint>
#include <string>

#include "eden/kvconfig.hpp"
#include "eden/records.hpp"
#include "eden/rng.hpp"

namespace eden::data {

/// Parameters of the synthetic claims-cohort generator. Default rates and
/// time scales are desk-scale calibration targets for a breast-cancer
/// follow-up cohort (three relapse types, heavy right-censoring).
struct GeneratorSpec {
  int patients = 1000;
  double rate_locoregional = 0.056;
  double rate_metastatic = 0.061;
  double rate_second_cancer = 0.038;
  double censoring_rate = 0.864;
  /// Per observed event: probability that its code signature is corrupted
  /// (half the corrupted signatures are omitted, half delayed).
  double noise_rate = 0.0;
  double mean_time_locoregional = 1337;  // days
  double mean_time_metastatic = 1171;
  double mean_time_second_cancer = 1274;
  double mean_time_censor = 1814;
  std::uint64_t seed = 42;

  static GeneratorSpec from_file(const std::string& path);
  static GeneratorSpec from_kv(const KvFile& kv);
  KvFile to_kv() const;

  /// Throws on an infeasible spec (rates/censoring inconsistent, bad ranges).
  void validate() const;
};

/// Deterministic synthetic cohort: per-patient streams derived from
/// (seed, patient index). Every record satisfies the PatientRecord
/// invariants; visits come pre-merged.
Cohort generate_cohort(const GeneratorSpec& spec);

/// Conditional per-type event probabilities q s.t. marginal event rates and
/// the censored fraction both match the spec. Exposed for tests.
std::vector<double> conditional_event_probs(const GeneratorSpec& spec);

}  // namespace eden::data
