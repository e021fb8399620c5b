#pragma once

#include <string>
#include <vector>

#include "eden/vocab.hpp"

namespace eden::data {

/// One medical visit: day offset from sequence start plus the set of
/// vocabulary indices recorded that day (sorted, unique, non-empty).
struct Visit {
  long tau = 0;
  std::vector<int> codes;

  bool operator==(const Visit&) const = default;
};

struct EventLabel {
  bool observed = false;  // Y
  long time = 0;          // T: event day if observed, else day of last news
};

struct PatientRecord {
  std::string id;
  std::vector<Visit> visits;
  std::vector<EventLabel> labels;  // one per event type

  long last_tau() const { return visits.back().tau; }
};

struct Cohort {
  std::vector<std::string> event_names;  // e.g. locoregional, metastatic, second_cancer
  std::vector<PatientRecord> patients;

  int n_events() const { return static_cast<int>(event_names.size()); }
  size_t size() const { return patients.size(); }
};

const std::vector<std::string>& default_event_names();

/// Collapses runs of consecutive visits carrying the same code set into a
/// single visit at the earliest day of the run. Input must be time-sorted.
/// Idempotent; output days strictly increasing.
std::vector<Visit> merge_consecutive(const std::vector<Visit>& visits);

/// Throws with a description if `rec` violates any record invariant.
void validate_record(const PatientRecord& rec, int n_events, int vocab_size);

struct CohortStats {
  size_t patients = 0;
  double visits_per_patient = 0.0;
  double codes_per_visit = 0.0;
  double censoring_rate = 0.0;        // fraction of patients with no observed event
  double time_to_censor = 0.0;        // mean over censored patients
  std::vector<double> event_rate;     // per type
  std::vector<double> time_to_event;  // per type, mean over observed
};

CohortStats compute_stats(const Cohort& cohort);
std::string format_stats(const CohortStats& s, const std::vector<std::string>& event_names);

// Cohort files: one patient per line, UTF-8, LF line endings.
//   id TAB type:Y:T;type:Y:T;... TAB tau:Code,Code;tau:Code;...
// Code names come from the standard vocabulary.
void write_cohort(const Cohort& cohort, const std::string& path);
std::string serialize_cohort(const Cohort& cohort);
Cohort read_cohort(const std::string& path);
Cohort parse_cohort(const std::string& text, const std::string& origin);

}  // namespace eden::data
