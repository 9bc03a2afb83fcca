#include "caprob/rng.h"

#include <bit>
#include <numeric>

namespace caprob {

SeedHasher& SeedHasher::add(double v) {
  // Normalise -0.0 so that equal axis values hash equally.
  if (v == 0.0) v = 0.0;
  return add(std::bit_cast<std::uint64_t>(v));
}

SeedHasher& SeedHasher::add(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return add(h);
}

Eigen::MatrixXd standard_normal(Rng& rng, Eigen::Index n, Eigen::Index d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = normal(rng);
  }
  return m;
}

std::vector<Eigen::Index> permutation(Rng& rng, Eigen::Index n) {
  std::vector<Eigen::Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Eigen::Index{0});
  for (Eigen::Index i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<Eigen::Index> pick(0, i);
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(pick(rng))]);
  }
  return p;
}

}  // namespace caprob
