#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace cascade {

// Derives an independent stream seed from a master seed and a role tag
// ("split", "kmeans", "init", ...). Every source of randomness in the
// project is keyed this way so a single --seed reproduces a whole run.
std::uint64_t split_seed(std::uint64_t seed, std::string_view role);

// splitmix64-based generator. Self-contained so that sequences are stable
// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  Rng(std::uint64_t seed, std::string_view role) : state_(split_seed(seed, role)) {}

  std::uint64_t next_u64();

  // [0, 1)
  double uniform();
  double uniform(double lo, double hi);

  // standard normal, Box-Muller with cached spare
  double normal();

  // [0, n)
  int uniform_int(int n);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(static_cast<int>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cascade
