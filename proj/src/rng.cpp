#include "rrbias/rng.hpp"

#include <cmath>

#include "rrbias/errors.hpp"

namespace rrbias {

double RandomStream::exponential(double rate) {
  if (!(rate > 0.0)) throw NumericalError("exponential draw needs a positive rate");
  return -std::log(uniform_open_low()) / rate;
}

std::size_t RandomStream::uniform_index(std::size_t n) noexcept {
  const std::uint64_t bound = n;
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return static_cast<std::size_t>(r % bound);
  }
}

std::uint64_t RandomStream::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw NumericalError("poisson draw needs a finite mean >= 0");
  }
  // Sequential inversion on chunks of mean <= 30 keeps e^{-mean} well away
  // from underflow; a sum of independent Poissons is Poisson.
  constexpr double kChunk = 30.0;
  std::uint64_t total = 0;
  double remaining = mean;
  while (remaining > 0.0) {
    const double mu = remaining > kChunk ? kChunk : remaining;
    remaining -= mu;
    const double u = uniform();
    double p = std::exp(-mu);
    double cdf = p;
    std::uint64_t k = 0;
    while (u >= cdf && k < 10000) {
      ++k;
      p *= mu / static_cast<double>(k);
      cdf += p;
      if (p == 0.0) break;
    }
    total += k;
  }
  return total;
}

}  // namespace rrbias
