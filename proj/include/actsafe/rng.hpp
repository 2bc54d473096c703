#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace actsafe {

// Deterministic, splittable random stream. Child streams are derived by
// hashing (seed, tag), so results do not depend on the order in which
// siblings are consumed. This is what makes parallel candidate/seed
// evaluation reproducible.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

  // Independent stream addressed by tag; stable under scheduling order.
  RngStream child(std::uint64_t tag) const {
    return RngStream(mix(seed_ ^ mix(tag + 0x9e3779b97f4a7c15ull)));
  }

  double normal() {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(engine_);
  }

  double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(engine_);
  }

  std::uint64_t integer() { return engine_(); }

  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Eigen::VectorXd uniform_vector(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    Eigen::VectorXd v(lo.size());
    for (int i = 0; i < lo.size(); ++i) v[i] = uniform(lo[i], hi[i]);
    return v;
  }

  std::uint64_t seed() const { return seed_; }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace actsafe
