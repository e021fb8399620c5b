#include "eden/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "eden/survival.hpp"

namespace eden::model {

void ModelConfig::validate() const {
  if (vocab_size < 1 || n_emb < 1 || n_hidden < 1 || fc_size < 1 || n_events < 1)
    throw std::invalid_argument("ModelConfig: all sizes must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw std::invalid_argument("ModelConfig: dropout_rate must lie in [0, 1)");
}

long ModelConfig::param_count(bool time_aware, bool bidirectional) const {
  const long H = n_hidden, E = n_emb, P = vocab_size, F = fc_size, S = n_events;
  long cell = 4 * H * E + 4 * H * H + 4 * H;     // gates
  if (time_aware) cell += H * H + H;             // memory decomposition
  const long dirs = bidirectional ? 2 : 1;
  const long fc_in = dirs * H;
  return E * P + dirs * cell + F * fc_in + F + S * F + S;
}

int ParamStore::add(std::string name, Matrix m) {
  if (index_of(name) >= 0) throw std::invalid_argument("ParamStore: duplicate name " + name);
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(m));
  return static_cast<int>(tensors_.size()) - 1;
}

int ParamStore::index_of(std::string_view name) const {
  for (size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return -1;
}

Matrix& ParamStore::at(std::string_view name) {
  const int i = index_of(name);
  if (i < 0) throw std::invalid_argument("ParamStore: no tensor named " + std::string(name));
  return tensors_[i];
}

const Matrix& ParamStore::at(std::string_view name) const {
  return const_cast<ParamStore*>(this)->at(name);
}

long ParamStore::scalar_count() const {
  long n = 0;
  for (const auto& t : tensors_) n += static_cast<long>(t.size());
  return n;
}

double discount(double delta_days) {
  if (delta_days < 0.0) throw std::invalid_argument("discount: negative delta");
  return 1.0 / std::log(M_E + delta_days);
}

namespace {

Matrix uniform_matrix(int rows, int cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (auto& x : m.v) x = rng.uniform(-bound, bound);
  return m;
}

void add_cell_params(ParamStore& ps, const std::string& prefix, const ModelConfig& cfg,
                     bool time_aware, Rng& rng) {
  const int H = cfg.n_hidden, E = cfg.n_emb;
  const double bound = 1.0 / std::sqrt(static_cast<double>(H));
  for (const char* g : {"W_f", "W_i", "W_o", "W_c"})
    ps.add(prefix + g, uniform_matrix(H, E, bound, rng));
  for (const char* g : {"U_f", "U_i", "U_o", "U_c"})
    ps.add(prefix + g, uniform_matrix(H, H, bound, rng));
  for (const char* g : {"b_f", "b_i", "b_o", "b_c"}) ps.add(prefix + g, Matrix::zeros(H, 1));
  if (time_aware) {
    ps.add(prefix + "W_d", uniform_matrix(H, H, bound, rng));
    ps.add(prefix + "b_d", Matrix::zeros(H, 1));
  }
}

}  // namespace

Model Model::init(const ModelConfig& cfg, const ArchFlags& flags, Rng& rng) {
  cfg.validate();
  Model m;
  m.cfg = cfg;
  m.flags = flags;
  ParamStore& ps = m.params;
  ps.add("M_emb", uniform_matrix(cfg.n_emb, cfg.vocab_size, 0.05, rng));
  add_cell_params(ps, "fwd.", cfg, flags.time_aware, rng);
  if (flags.bidirectional) add_cell_params(ps, "bwd.", cfg, flags.time_aware, rng);
  const int fc_in = (flags.bidirectional ? 2 : 1) * cfg.n_hidden;
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.n_hidden));
  ps.add("fc.W1", uniform_matrix(cfg.fc_size, fc_in, bound, rng));
  ps.add("fc.b1", Matrix::zeros(cfg.fc_size, 1));
  ps.add("fc.W2", uniform_matrix(cfg.n_events, cfg.fc_size, bound, rng));
  ps.add("fc.b2", Matrix::zeros(cfg.n_events, 1));
  return m;
}

std::vector<Tape::Id> insert_params(Tape& tape, const ParamStore& params) {
  std::vector<Tape::Id> ids;
  ids.reserve(params.count());
  for (int i = 0; i < params.count(); ++i) ids.push_back(tape.input(params.tensor(i), true));
  return ids;
}

namespace {

struct CellIdsResolver {
  CellParamIds resolve(const std::vector<Tape::Id>& ids, const ParamStore& ps,
                       const std::string& prefix, bool time_aware) const {
    auto id = [&](const char* n) {
      const int i = ps.index_of(prefix + n);
      if (i < 0) throw std::logic_error("missing cell parameter " + prefix + n);
      return ids[i];
    };
    CellParamIds c;
    c.W_f = id("W_f"); c.W_i = id("W_i"); c.W_o = id("W_o"); c.W_c = id("W_c");
    c.U_f = id("U_f"); c.U_i = id("U_i"); c.U_o = id("U_o"); c.U_c = id("U_c");
    c.b_f = id("b_f"); c.b_i = id("b_i"); c.b_o = id("b_o"); c.b_c = id("b_c");
    if (time_aware) {
      c.W_d = id("W_d");
      c.b_d = id("b_d");
    }
    return c;
  }
};

Tape::Id gate_preact(Tape& tape, Tape::Id W, Tape::Id U, Tape::Id b, Tape::Id x, Tape::Id h) {
  return tape.add(tape.add(tape.matmul(W, x), tape.matmul(U, h)), b);
}

CellState gated_update(Tape& tape, const CellParamIds& p, Tape::Id x, const CellState& prev,
                       Tape::Id adjusted_memory) {
  const Tape::Id f = tape.sigmoid(gate_preact(tape, p.W_f, p.U_f, p.b_f, x, prev.hidden));
  const Tape::Id i = tape.sigmoid(gate_preact(tape, p.W_i, p.U_i, p.b_i, x, prev.hidden));
  const Tape::Id o = tape.sigmoid(gate_preact(tape, p.W_o, p.U_o, p.b_o, x, prev.hidden));
  const Tape::Id ctilde = tape.tanh(gate_preact(tape, p.W_c, p.U_c, p.b_c, x, prev.hidden));
  const Tape::Id memory = tape.add(tape.mul(f, adjusted_memory), tape.mul(i, ctilde));
  const Tape::Id hidden = tape.mul(o, tape.tanh(memory));
  return {hidden, memory};
}

}  // namespace

CellState tlstm_step(Tape& tape, const CellParamIds& p, Tape::Id x_emb, double delta,
                     const CellState& prev) {
  Tape::Id adjusted;
  if (delta == 0.0) {
    // g(0) = 1, so C* = (C - C_S) + C_S = C exactly; skipping the
    // decomposition keeps value and gradient identities exact
    adjusted = prev.memory;
  } else {
    const Tape::Id cs = tape.tanh(tape.add(tape.matmul(p.W_d, prev.memory), p.b_d));
    const Tape::Id cl = tape.sub(prev.memory, cs);
    const Tape::Id cs_hat = tape.scale(cs, discount(delta));
    adjusted = tape.add(cl, cs_hat);
  }
  return gated_update(tape, p, x_emb, prev, adjusted);
}

CellState lstm_step(Tape& tape, const CellParamIds& p, Tape::Id x_emb, const CellState& prev) {
  return gated_update(tape, p, x_emb, prev, prev.memory);
}

std::vector<Matrix> make_dropout_masks(int n_visits, int fc_size, double rate, Rng& rng) {
  std::vector<Matrix> masks;
  masks.reserve(n_visits);
  const double keep = 1.0 - rate;
  for (int j = 0; j < n_visits; ++j) {
    Matrix m(fc_size, 1);
    for (auto& x : m.v) x = rng.uniform01() < rate ? 0.0 : 1.0 / keep;
    masks.push_back(std::move(m));
  }
  return masks;
}

ForwardResult build_forward(Tape& tape, const std::vector<Tape::Id>& param_ids,
                            const ParamStore& params, const ModelConfig& cfg,
                            const ArchFlags& flags, const data::PatientRecord& rec,
                            const std::vector<Matrix>* dropout_masks) {
  const int N = static_cast<int>(rec.visits.size());
  if (N == 0) throw std::invalid_argument("build_forward: empty visit sequence");
  const CellIdsResolver resolver;
  const CellParamIds fwd = resolver.resolve(param_ids, params, "fwd.", flags.time_aware);

  const Tape::Id m_emb = param_ids[params.index_of("M_emb")];
  std::vector<Tape::Id> embedded(N);
  for (int j = 0; j < N; ++j) {
    Matrix codes(cfg.vocab_size, 1);
    for (int c : rec.visits[j].codes) codes.v[c] = 1.0;
    embedded[j] = tape.matmul(m_emb, tape.input(std::move(codes), false));
  }

  const Tape::Id zero_h = tape.input(Matrix::zeros(cfg.n_hidden, 1), false);
  CellState state{zero_h, zero_h};
  std::vector<Tape::Id> fwd_hidden(N), bwd_hidden;
  for (int j = 0; j < N; ++j) {
    const double delta = j == 0 ? 0.0 : static_cast<double>(rec.visits[j].tau - rec.visits[j - 1].tau);
    state = flags.time_aware ? tlstm_step(tape, fwd, embedded[j], delta, state)
                             : lstm_step(tape, fwd, embedded[j], state);
    fwd_hidden[j] = state.hidden;
  }
  if (flags.bidirectional) {
    const CellParamIds bwd = resolver.resolve(param_ids, params, "bwd.", flags.time_aware);
    bwd_hidden.assign(N, -1);
    CellState bstate{zero_h, zero_h};
    for (int j = N - 1; j >= 0; --j) {
      // delta in scan order: gap to the chronologically next visit
      const double delta =
          j == N - 1 ? 0.0 : static_cast<double>(rec.visits[j + 1].tau - rec.visits[j].tau);
      bstate = flags.time_aware ? tlstm_step(tape, bwd, embedded[j], delta, bstate)
                                : lstm_step(tape, bwd, embedded[j], bstate);
      bwd_hidden[j] = bstate.hidden;
    }
  }

  const Tape::Id W1 = param_ids[params.index_of("fc.W1")];
  const Tape::Id b1 = param_ids[params.index_of("fc.b1")];
  const Tape::Id W2 = param_ids[params.index_of("fc.W2")];
  const Tape::Id b2 = param_ids[params.index_of("fc.b2")];

  ForwardResult res;
  res.outputs.reserve(N);
  Tape::Id survival_prod = -1;
  for (int j = 0; j < N; ++j) {
    const Tape::Id hcat =
        flags.bidirectional ? tape.concat_rows(fwd_hidden[j], bwd_hidden[j]) : fwd_hidden[j];
    Tape::Id z = tape.tanh(tape.add(tape.matmul(W1, hcat), b1));
    if (dropout_masks != nullptr)
      z = tape.mul(z, tape.input((*dropout_masks)[j], false));
    const Tape::Id head = tape.sigmoid(tape.add(tape.matmul(W2, z), b2));
    if (!flags.survival_output) {
      res.outputs.push_back(head);
      continue;
    }
    const Tape::Id hz = tape.clamp(head, survival::kHazardClampLo, survival::kHazardClampHi);
    res.hazards.push_back(hz);
    const Tape::Id u = tape.rsub_const(1.0, hz);
    survival_prod = j == 0 ? u : tape.mul(survival_prod, u);
    res.outputs.push_back(tape.rsub_const(1.0, survival_prod));
  }
  return res;
}

std::vector<Matrix> forward_sequence(const ParamStore& params, const ModelConfig& cfg,
                                     bool time_aware, const std::string& prefix,
                                     const std::vector<Matrix>& embedded,
                                     const std::vector<long>& days, bool backward_direction) {
  const int N = static_cast<int>(embedded.size());
  if (N == 0) throw std::invalid_argument("forward_sequence: empty sequence");
  if (days.size() != embedded.size())
    throw std::invalid_argument("forward_sequence: days/embedding length mismatch");
  Tape tape;
  const std::vector<Tape::Id> ids = insert_params(tape, params);
  const CellParamIds cell = CellIdsResolver().resolve(ids, params, prefix, time_aware);
  const Tape::Id zero = tape.input(Matrix::zeros(cfg.n_hidden, 1), false);
  CellState state{zero, zero};
  std::vector<Matrix> hidden(N);
  if (!backward_direction) {
    for (int j = 0; j < N; ++j) {
      const double delta = j == 0 ? 0.0 : static_cast<double>(days[j] - days[j - 1]);
      const Tape::Id x = tape.input(embedded[j], false);
      state = time_aware ? tlstm_step(tape, cell, x, delta, state)
                         : lstm_step(tape, cell, x, state);
      hidden[j] = tape.value(state.hidden);
    }
  } else {
    for (int j = N - 1; j >= 0; --j) {
      const double delta = j == N - 1 ? 0.0 : static_cast<double>(days[j + 1] - days[j]);
      const Tape::Id x = tape.input(embedded[j], false);
      state = time_aware ? tlstm_step(tape, cell, x, delta, state)
                         : lstm_step(tape, cell, x, state);
      hidden[j] = tape.value(state.hidden);
    }
  }
  return hidden;
}

std::vector<std::vector<double>> Model::event_rates(const data::PatientRecord& rec) const {
  Tape tape;
  const std::vector<Tape::Id> ids = insert_params(tape, params);
  const ForwardResult fr = build_forward(tape, ids, params, cfg, flags, rec, nullptr);
  std::vector<std::vector<double>> out;
  out.reserve(fr.outputs.size());
  for (const Tape::Id id : fr.outputs) out.push_back(tape.value(id).v);
  return out;
}

// ---- checkpoint I/O --------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'E', 'D', 'E', 'N', 'C', 'K', 'P', '1'};

void write_u32(std::ofstream& f, std::uint32_t x) { f.write(reinterpret_cast<char*>(&x), 4); }
void write_f64(std::ofstream& f, double x) { f.write(reinterpret_cast<char*>(&x), 8); }

std::uint32_t read_u32(std::ifstream& f) {
  std::uint32_t x = 0;
  f.read(reinterpret_cast<char*>(&x), 4);
  return x;
}
double read_f64(std::ifstream& f) {
  double x = 0;
  f.read(reinterpret_cast<char*>(&x), 8);
  return x;
}

}  // namespace

void Model::save(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + tmp);
    f.write(kMagic, 8);
    write_u32(f, static_cast<std::uint32_t>(cfg.vocab_size));
    write_u32(f, static_cast<std::uint32_t>(cfg.n_emb));
    write_u32(f, static_cast<std::uint32_t>(cfg.n_hidden));
    write_u32(f, static_cast<std::uint32_t>(cfg.fc_size));
    write_u32(f, static_cast<std::uint32_t>(cfg.n_events));
    write_f64(f, cfg.dropout_rate);
    const char fl[3] = {static_cast<char>(flags.time_aware), static_cast<char>(flags.bidirectional),
                        static_cast<char>(flags.survival_output)};
    f.write(fl, 3);
    write_u32(f, static_cast<std::uint32_t>(params.count()));
    for (int i = 0; i < params.count(); ++i) {
      const std::string& name = params.name(i);
      const Matrix& t = params.tensor(i);
      write_u32(f, static_cast<std::uint32_t>(name.size()));
      f.write(name.data(), static_cast<std::streamsize>(name.size()));
      write_u32(f, static_cast<std::uint32_t>(t.rows));
      write_u32(f, static_cast<std::uint32_t>(t.cols));
      f.write(reinterpret_cast<const char*>(t.v.data()),
              static_cast<std::streamsize>(t.v.size() * sizeof(double)));
    }
    if (!f) throw std::runtime_error("checkpoint write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot move checkpoint into place: " + path);
}

Model Model::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not a model checkpoint: " + path);
  Model m;
  m.cfg.vocab_size = static_cast<int>(read_u32(f));
  m.cfg.n_emb = static_cast<int>(read_u32(f));
  m.cfg.n_hidden = static_cast<int>(read_u32(f));
  m.cfg.fc_size = static_cast<int>(read_u32(f));
  m.cfg.n_events = static_cast<int>(read_u32(f));
  m.cfg.dropout_rate = read_f64(f);
  char fl[3];
  f.read(fl, 3);
  m.flags.time_aware = fl[0] != 0;
  m.flags.bidirectional = fl[1] != 0;
  m.flags.survival_output = fl[2] != 0;
  const std::uint32_t n = read_u32(f);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t len = read_u32(f);
    std::string name(len, '\0');
    f.read(name.data(), len);
    const int rows = static_cast<int>(read_u32(f));
    const int cols = static_cast<int>(read_u32(f));
    Matrix t(rows, cols);
    f.read(reinterpret_cast<char*>(t.v.data()),
           static_cast<std::streamsize>(t.v.size() * sizeof(double)));
    m.params.add(std::move(name), std::move(t));
  }
  if (!f) throw std::runtime_error("truncated checkpoint: " + path);
  m.cfg.validate();
  return m;
}

}  // namespace eden::model
