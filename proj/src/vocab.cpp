#include "eden/vocab.hpp"

#include <stdexcept>

namespace eden::data {

namespace {

struct Entry {
  const char* name;
  CodeKind kind;
};

constexpr CodeKind P = CodeKind::kProcedure;
constexpr CodeKind D = CodeKind::kDiagnosis;
constexpr CodeKind M = CodeKind::kMedication;
constexpr CodeKind PD = CodeKind::kProcedureAndDiagnosis;

const Entry kEntries[] = {
    // procedures
    {"Axillary surgery", P},
    {"Breast biopsy", P},
    {"Breast cytology", P},
    {"Breast imaging", P},
    {"Lumpectomy", P},
    {"Lumpectomy/Axillary surgery", P},
    {"Mastectomy", P},
    {"Mastectomy/Axillary surgery", P},
    {"Node cytology", P},
    {"Whole body imaging", P},
    // defined from both procedure and diagnosis codes
    {"Chemotherapy", PD},
    {"Radiotherapy", PD},
    // diagnoses
    {"Breast Cancer", D},
    {"Metastasis", D},
    {"Node", D},
    {"Other cancer", D},
    {"Palliative care", D},
    {"Personal history of BC", D},
    // medications
    {"Anastrozole", M},
    {"Bevacizumab", M},
    {"BYL719", M},
    {"Capecitabine", M},
    {"Cyclophosphamide", M},
    {"Docetaxel", M},
    {"Doxorubicine", M},
    {"Epirubicine", M},
    {"Eribuline", M},
    {"Etoposide", M},
    {"Everolimus", M},
    {"Exemestane", M},
    {"Fluorouracile", M},
    {"Fulvestrant", M},
    {"Gemcitabine", M},
    {"Gosereline", M},
    {"Lapatinib", M},
    {"Letrozole", M},
    {"Leuproreline", M},
    {"Melphalan", M},
    {"Methotrexate", M},
    {"Mitomycine", M},
    {"Paclitaxel", M},
    {"Palbociclib", M},
    {"Pertuzumab", M},
    {"Tamoxifen", M},
    {"Trastuzumab", M},
    {"Triptoreline", M},
    {"Vinorelbine", M},
};

}  // namespace

Vocabulary::Vocabulary() {
  for (const auto& e : kEntries) {
    names_.emplace_back(e.name);
    kinds_.push_back(e.kind);
  }
}

const Vocabulary& Vocabulary::standard() {
  static const Vocabulary v;
  return v;
}

int Vocabulary::find(std::string_view name) const {
  for (size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return -1;
}

int Vocabulary::require(std::string_view name) const {
  const int idx = find(name);
  if (idx < 0) throw std::runtime_error("unknown medical code: " + std::string(name));
  return idx;
}

std::vector<int> Vocabulary::indices_of(const std::vector<std::string>& names) const {
  std::vector<int> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(require(n));
  return out;
}

const std::vector<std::string>& metastatic_only_drugs() {
  static const std::vector<std::string> drugs = {
      "Bevacizumab", "BYL719",       "Capecitabine", "Eribuline",  "Etoposide",
      "Everolimus",  "Fulvestrant",  "Gemcitabine",  "Lapatinib",  "Melphalan",
      "Methotrexate", "Mitomycine",  "Palbociclib"};
  return drugs;
}

const std::vector<std::string>& breast_surgery_codes() {
  static const std::vector<std::string> codes = {
      "Lumpectomy", "Lumpectomy/Axillary surgery", "Mastectomy", "Mastectomy/Axillary surgery"};
  return codes;
}

}  // namespace eden::data
