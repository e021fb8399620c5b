#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace eden::data {

enum class CodeKind { kProcedure, kDiagnosis, kMedication, kProcedureAndDiagnosis };

/// The fixed 47-category medical code vocabulary. Chemotherapy and
/// radiotherapy appear once each, tagged as both procedure and diagnosis.
/// Code names are the wire format for cohort files.
class Vocabulary {
 public:
  static const Vocabulary& standard();

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int idx) const { return names_.at(idx); }
  CodeKind kind(int idx) const { return kinds_.at(idx); }
  /// Index of `name`, or -1 if unknown.
  int find(std::string_view name) const;
  /// Index of `name`; throws naming the code if unknown.
  int require(std::string_view name) const;

  std::vector<int> indices_of(const std::vector<std::string>& names) const;

 private:
  Vocabulary();
  std::vector<std::string> names_;
  std::vector<CodeKind> kinds_;
};

/// The 13 medications specific to metastatic disease.
const std::vector<std::string>& metastatic_only_drugs();

/// The 4 breast surgery categories.
const std::vector<std::string>& breast_surgery_codes();

}  // namespace eden::data
