#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lensrig {

// Spatial vectors/matrices for n in {2,3}. Fixed maximum size keeps them
// off the heap while the dimension stays a runtime value.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

// Phase-space (x, xi) vectors/matrices, dimension 2n.
using PhaseVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;
using PhaseMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6>;

inline Vec make_vec(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
inline Vec make_vec(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

/// Point of T*M: position x [length] and covector xi [time/length].
struct PhasePoint {
  Vec x;
  Vec xi;

  int dim() const { return static_cast<int>(x.size()); }

  PhaseVec packed() const {
    PhaseVec z(2 * x.size());
    z.head(x.size()) = x;
    z.tail(x.size()) = xi;
    return z;
  }
  static PhasePoint unpack(const PhaseVec& z) {
    const auto n = z.size() / 2;
    PhasePoint p;
    p.x = z.head(n);
    p.xi = z.tail(n);
    return p;
  }
};

enum class ErrorCode {
  OutOfDomain,
  DegenerateInput,
  DegenerateFoliation,
  Trapped,
  NoConvergence,
  MissingData,
  NoOverlap,
  NotConcave,
  EmptyRaySet,
  AssemblyError,
  SolverError,
  InvalidConvexity,
  ConfigError,
  IoError,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::DegenerateFoliation: return "DegenerateFoliation";
    case ErrorCode::Trapped: return "Trapped";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::MissingData: return "MissingData";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::NotConcave: return "NotConcave";
    case ErrorCode::EmptyRaySet: return "EmptyRaySet";
    case ErrorCode::AssemblyError: return "AssemblyError";
    case ErrorCode::SolverError: return "SolverError";
    case ErrorCode::InvalidConvexity: return "InvalidConvexity";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Deterministic random source. Hand-rolled conversions so that streams do
/// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next_u64() {
    // xorshift* generator; period 2^64-1.
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dull;
  }

  double uniform() {  // [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    // Box-Muller; one value per call, cache the partner.
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lensrig
