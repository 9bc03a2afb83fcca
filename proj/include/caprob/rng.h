#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace caprob {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive seed derivation. Feeding the same sequence of values
/// always yields the same seed; values are mixed, not concatenated, so
/// adding a field changes the result rather than colliding.
class SeedHasher {
 public:
  explicit SeedHasher(std::uint64_t base) : state_(splitmix64(base)) {}

  SeedHasher& add(std::uint64_t v) {
    state_ = splitmix64(state_ ^ splitmix64(v + 0x632be59bd9b4e019ULL));
    return *this;
  }
  SeedHasher& add(double v);
  SeedHasher& add(std::string_view s);

  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_;
};

/// n x d matrix of i.i.d. N(0, 1), filled row by row.
Eigen::MatrixXd standard_normal(Rng& rng, Eigen::Index n, Eigen::Index d);

/// Fisher-Yates permutation of 0..n-1.
std::vector<Eigen::Index> permutation(Rng& rng, Eigen::Index n);

}  // namespace caprob
