#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace riskgraph {

/// Seeded generator with portable distributions. The standard library's
/// distribution classes are implementation-defined, so sampling is done here
/// on top of the (fully specified) 64-bit Mersenne Twister.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t below(std::size_t n);  // [0, n)
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double gamma(double shape, double scale);
  std::int64_t poisson(double mean);
  // Poisson with gamma-distributed rate: mean `mean`, overdispersion `shape`.
  std::int64_t negative_binomial(double mean, double shape);
  int binomial(int trials, double p);
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t categorical(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  // Independent child stream; keeps results stable when call sites are added elsewhere.
  Rng fork(std::uint64_t salt);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace riskgraph
