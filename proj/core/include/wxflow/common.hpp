#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace wxflow {

using Vertex = int;
using EdgeId = int;
using Cap = long long;

// Relative tolerance used in every feasibility / conservation check.
inline constexpr double kRelTol = 1e-9;

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input: bad file, out-of-range ids, inconsistent structure.
struct InputError : Error {
  explicit InputError(const std::string& what) : Error(what) {}
};

// A stated contract (oracle clause, theorem property) failed at runtime.
// The message names the violated clause.
struct ContractError : Error {
  explicit ContractError(const std::string& what) : Error(what) {}
};

// Guard against calling a brute-force routine on an oversized instance.
struct SizeError : Error {
  explicit SizeError(const std::string& what) : Error(what) {}
};

// An iterative solver hit its iteration cap without a verified answer.
struct UnconvergedError : Error {
  explicit UnconvergedError(const std::string& what) : Error(what) {}
};

// splitmix64-seeded xoshiro256++, self-contained so that runs are
// reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& si : s_) {
      x += 0x9e3779b97f4a7c15ULL;
      uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      si = z ^ (z >> 31);
    }
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0,1).
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller (deterministic given the seed).
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = next_double();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline double sum_abs(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += std::abs(x);
  return s;
}

inline long long ceil_div(long long a, long long b) { return (a + b - 1) / b; }

inline double log2d(double x) { return std::log2(x); }

}  // namespace wxflow
