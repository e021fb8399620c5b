#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace eden {

/// Deterministic random source. mt19937_64 is bit-identical across
/// platforms; distributions are implemented here (not via <random>'s
/// distribution templates, whose output is implementation-defined), so a
/// seed reproduces the same stream everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream addressed by (seed, name[, index]); used to give
  /// generation, batching, init, dropout and search their own streams.
  static Rng substream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Uniform integer in [0, n), n > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  /// Uniform integer in [lo, hi], inclusive.
  long long range(long long lo, long long hi) {
    return lo + static_cast<long long>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  bool bernoulli(double p) { return uniform01() < p; }

  double normal();  // standard normal, Box-Muller (both values used in turn)
  double exponential(double mean) ;
  double gamma(double shape, double scale);  // Marsaglia-Tsang
  double lognormal(double mu_log, double sigma_log);

  template <class T>
  void shuffle(std::vector<T>& xs) {
    for (size_t i = xs.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(below(i));
      std::swap(xs[i - 1], xs[j]);
    }
  }

  /// k distinct values sampled without replacement from [0, n).
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace eden
