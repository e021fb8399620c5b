#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "eden/matrix.hpp"
#include "eden/records.hpp"
#include "eden/rng.hpp"
#include "eden/tape.hpp"

namespace eden::model {

using num::Matrix;
using num::Tape;

struct ModelConfig {
  int vocab_size = 47;
  int n_emb = 50;
  int n_hidden = 128;
  int fc_size = 1024;
  double dropout_rate = 0.5;
  int n_events = 3;

  void validate() const;
  long param_count(bool time_aware, bool bidirectional) const;
};

struct ArchFlags {
  bool time_aware = true;
  bool bidirectional = true;
  bool survival_output = true;
};

/// Named parameter tensors in fixed registration order (the order drives
/// initialization draws, checkpoint layout and Adam state).
class ParamStore {
 public:
  int add(std::string name, Matrix m);
  Matrix& at(std::string_view name);
  const Matrix& at(std::string_view name) const;
  int index_of(std::string_view name) const;  // -1 if absent
  int count() const { return static_cast<int>(tensors_.size()); }
  const std::string& name(int i) const { return names_[i]; }
  Matrix& tensor(int i) { return tensors_[i]; }
  const Matrix& tensor(int i) const { return tensors_[i]; }
  long scalar_count() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> tensors_;
};

/// Memory discount g(delta) = 1 / log(e + delta); g(0) = 1, strictly
/// decreasing, positive. `delta` is a day count.
double discount(double delta_days);

struct Model {
  ModelConfig cfg;
  ArchFlags flags;
  ParamStore params;

  static Model init(const ModelConfig& cfg, const ArchFlags& flags, Rng& rng);

  /// Per-visit output matrix (one row per visit, n_events columns):
  /// event-rate W when survival_output, otherwise the raw head output.
  /// Evaluation path: no dropout.
  std::vector<std::vector<double>> event_rates(const data::PatientRecord& rec) const;

  void save(const std::string& path) const;
  static Model load(const std::string& path);
};

// ---- tape-level building blocks ------------------------------------------

/// Parameter tensors inserted as grad-requiring leaves, index-aligned with
/// the store.
std::vector<Tape::Id> insert_params(Tape& tape, const ParamStore& params);

struct CellParamIds {
  Tape::Id W_f, W_i, W_o, W_c;
  Tape::Id U_f, U_i, U_o, U_c;
  Tape::Id b_f, b_i, b_o, b_c;
  Tape::Id W_d = -1, b_d = -1;  // only for time-aware cells
};

struct CellState {
  Tape::Id hidden;
  Tape::Id memory;
};

/// One T-LSTM step: the carried memory is split into short/long-term parts,
/// the short-term part decayed by g(delta), then standard LSTM gating runs
/// on the adjusted memory. delta = 0 bypasses the decomposition: g(0) = 1
/// makes the adjusted memory equal the carried one exactly (same value and
/// gradient), which keeps the plain-LSTM reduction bit-exact.
CellState tlstm_step(Tape& tape, const CellParamIds& p, Tape::Id x_emb, double delta,
                     const CellState& prev);

/// Standard LSTM step (no time decay).
CellState lstm_step(Tape& tape, const CellParamIds& p, Tape::Id x_emb, const CellState& prev);

/// Inverted-dropout masks for the FC hidden layer, one per visit. Entries
/// are 0 or 1/(1-rate).
std::vector<Matrix> make_dropout_masks(int n_visits, int fc_size, double rate, Rng& rng);

struct ForwardResult {
  std::vector<Tape::Id> outputs;  // per visit: n_events x 1 (W or raw head output)
  std::vector<Tape::Id> hazards;  // per visit: clamped hazards (survival mode only)
};

/// Full forward graph for one patient. `dropout_masks` may be null (eval).
ForwardResult build_forward(Tape& tape, const std::vector<Tape::Id>& param_ids,
                            const ParamStore& params, const ModelConfig& cfg,
                            const ArchFlags& flags, const data::PatientRecord& rec,
                            const std::vector<Matrix>* dropout_masks);

/// Hidden-state sequence of a single direction, in forward visit order.
/// Exposed for unit tests of the scan semantics.
std::vector<Matrix> forward_sequence(const ParamStore& params, const ModelConfig& cfg,
                                     bool time_aware, const std::string& prefix,
                                     const std::vector<Matrix>& embedded,
                                     const std::vector<long>& days, bool backward_direction);

}  // namespace eden::model
