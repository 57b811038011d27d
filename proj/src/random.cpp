#include "tailmean/random.hpp"

#include <cmath>

namespace tailmean {

double Rng::exponential(double mean) { return -mean * std::log(uniform_open()); }

double Rng::gamma(double shape) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(engine_);
}

double Rng::normal() {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

std::uint64_t Rng::binomial(std::uint64_t trials, double p) {
  std::binomial_distribution<std::uint64_t> dist(trials, p);
  return dist(engine_);
}

std::uint64_t Rng::below(std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(engine_);
}

}  // namespace tailmean
