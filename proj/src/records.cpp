#include "eden/records.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace eden::data {

const std::vector<std::string>& default_event_names() {
  static const std::vector<std::string> names = {"locoregional", "metastatic", "second_cancer"};
  return names;
}

std::vector<Visit> merge_consecutive(const std::vector<Visit>& visits) {
  for (size_t i = 1; i < visits.size(); ++i)
    if (visits[i].tau < visits[i - 1].tau)
      throw std::invalid_argument("merge_consecutive: visits not time-sorted");
  std::vector<Visit> out;
  for (const auto& v : visits) {
    if (!out.empty() && out.back().codes == v.codes) continue;  // run continues; keep earliest day
    out.push_back(v);
  }
  return out;
}

void validate_record(const PatientRecord& rec, int n_events, int vocab_size) {
  auto fail = [&](const std::string& why) {
    throw std::runtime_error("patient " + rec.id + ": " + why);
  };
  if (rec.visits.empty()) fail("no visits");
  if (rec.visits.front().tau != 0) fail("first visit not at day 0");
  for (size_t i = 0; i < rec.visits.size(); ++i) {
    const Visit& v = rec.visits[i];
    if (i > 0 && v.tau <= rec.visits[i - 1].tau) fail("visit days not strictly increasing");
    if (v.codes.empty()) fail("visit with no codes");
    for (size_t j = 0; j < v.codes.size(); ++j) {
      if (v.codes[j] < 0 || v.codes[j] >= vocab_size) fail("code index out of range");
      if (j > 0 && v.codes[j] <= v.codes[j - 1]) fail("visit codes not sorted unique");
    }
  }
  if (static_cast<int>(rec.labels.size()) != n_events) fail("label count mismatch");
  for (const auto& lab : rec.labels) {
    if (lab.observed) {
      const bool at_visit = std::any_of(rec.visits.begin(), rec.visits.end(),
                                        [&](const Visit& v) { return v.tau == lab.time; });
      if (!at_visit) fail("observed event time matches no visit");
    } else {
      if (lab.time != rec.visits.back().tau) fail("censoring time is not the last visit");
    }
  }
}

CohortStats compute_stats(const Cohort& cohort) {
  if (cohort.patients.empty()) throw std::runtime_error("compute_stats: empty cohort");
  const int S = cohort.n_events();
  CohortStats s;
  s.patients = cohort.patients.size();
  s.event_rate.assign(S, 0.0);
  s.time_to_event.assign(S, 0.0);
  std::vector<long> observed(S, 0);
  size_t visits = 0, codes = 0, censored = 0;
  double censor_days = 0.0;
  for (const auto& p : cohort.patients) {
    visits += p.visits.size();
    for (const auto& v : p.visits) codes += v.codes.size();
    bool any = false;
    for (int e = 0; e < S; ++e) {
      if (p.labels[e].observed) {
        any = true;
        ++observed[e];
        s.time_to_event[e] += static_cast<double>(p.labels[e].time);
      }
    }
    if (!any) {
      ++censored;
      censor_days += static_cast<double>(p.visits.back().tau);
    }
  }
  s.visits_per_patient = static_cast<double>(visits) / static_cast<double>(s.patients);
  s.codes_per_visit = visits == 0 ? 0.0 : static_cast<double>(codes) / static_cast<double>(visits);
  s.censoring_rate = static_cast<double>(censored) / static_cast<double>(s.patients);
  s.time_to_censor = censored == 0 ? 0.0 : censor_days / static_cast<double>(censored);
  for (int e = 0; e < S; ++e) {
    s.event_rate[e] = static_cast<double>(observed[e]) / static_cast<double>(s.patients);
    s.time_to_event[e] = observed[e] == 0 ? 0.0 : s.time_to_event[e] / observed[e];
  }
  return s;
}

std::string format_stats(const CohortStats& s, const std::vector<std::string>& event_names) {
  char buf[128];
  std::string out;
  auto line = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof buf, fmt, args...);
    out += buf;
    out += "\n";
  };
  line("patients = %zu", s.patients);
  line("visits_per_patient = %.3f", s.visits_per_patient);
  line("codes_per_visit = %.3f", s.codes_per_visit);
  line("censoring_rate = %.4f", s.censoring_rate);
  line("time_to_censor_days = %.1f", s.time_to_censor);
  for (size_t e = 0; e < event_names.size(); ++e) {
    line("rate_%s = %.4f", event_names[e].c_str(), s.event_rate[e]);
    line("time_to_%s_days = %.1f", event_names[e].c_str(), s.time_to_event[e]);
  }
  return out;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

std::string serialize_cohort(const Cohort& cohort) {
  const Vocabulary& vocab = Vocabulary::standard();
  std::string out;
  for (const auto& p : cohort.patients) {
    out += p.id;
    out += '\t';
    for (size_t e = 0; e < cohort.event_names.size(); ++e) {
      if (e) out += ';';
      out += cohort.event_names[e];
      out += ':';
      out += p.labels[e].observed ? '1' : '0';
      out += ':';
      out += std::to_string(p.labels[e].time);
    }
    out += '\t';
    for (size_t i = 0; i < p.visits.size(); ++i) {
      if (i) out += ';';
      out += std::to_string(p.visits[i].tau);
      out += ':';
      for (size_t j = 0; j < p.visits[i].codes.size(); ++j) {
        if (j) out += ',';
        out += vocab.name(p.visits[i].codes[j]);
      }
    }
    out += '\n';
  }
  return out;
}

void write_cohort(const Cohort& cohort, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write cohort file: " + path);
  f << serialize_cohort(cohort);
  if (!f) throw std::runtime_error("write failed: " + path);
}

Cohort parse_cohort(const std::string& text, const std::string& origin) {
  const Vocabulary& vocab = Vocabulary::standard();
  Cohort cohort;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) fail("expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    PatientRecord rec;
    rec.id = fields[0];
    if (rec.id.empty()) fail("empty patient id");

    std::vector<std::string> names;
    for (const auto& lab : split(fields[1], ';')) {
      const auto parts = split(lab, ':');
      if (parts.size() != 3) fail("malformed label triple: " + lab);
      names.push_back(parts[0]);
      EventLabel el;
      if (parts[1] == "1")
        el.observed = true;
      else if (parts[1] == "0")
        el.observed = false;
      else
        fail("event indicator must be 0 or 1: " + parts[1]);
      try {
        size_t pos = 0;
        el.time = std::stol(parts[2], &pos);
        if (pos != parts[2].size()) throw std::invalid_argument("");
      } catch (...) {
        fail("malformed event time: " + parts[2]);
      }
      rec.labels.push_back(el);
    }
    if (cohort.event_names.empty()) {
      cohort.event_names = names;
    } else if (cohort.event_names != names) {
      fail("event types differ from first record");
    }

    long prev_tau = -1;
    for (const auto& vs : split(fields[2], ';')) {
      const size_t colon = vs.find(':');
      if (colon == std::string::npos) fail("malformed visit: " + vs);
      Visit v;
      try {
        size_t pos = 0;
        v.tau = std::stol(vs.substr(0, colon), &pos);
        if (pos != colon) throw std::invalid_argument("");
      } catch (...) {
        fail("malformed visit day: " + vs.substr(0, colon));
      }
      if (v.tau <= prev_tau) fail("visit days not strictly increasing");
      prev_tau = v.tau;
      for (const auto& code : split(vs.substr(colon + 1), ',')) {
        const int idx = vocab.find(code);
        if (idx < 0) fail("unknown medical code: " + code);
        v.codes.push_back(idx);
      }
      std::sort(v.codes.begin(), v.codes.end());
      v.codes.erase(std::unique(v.codes.begin(), v.codes.end()), v.codes.end());
      if (v.codes.empty()) fail("visit with no codes");
      rec.visits.push_back(v);
    }

    try {
      validate_record(rec, static_cast<int>(cohort.event_names.size()), vocab.size());
    } catch (const std::exception& e) {
      fail(e.what());
    }
    cohort.patients.push_back(std::move(rec));
  }
  if (cohort.event_names.empty()) cohort.event_names = default_event_names();
  return cohort;
}

Cohort read_cohort(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open cohort file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_cohort(ss.str(), path);
}

}  // namespace eden::data
