#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace mdtk {

inline constexpr const char* kVersion = "0.1.0";

// Generator identity recorded in every output file so archived results can be
// regenerated bit-for-bit.
inline constexpr const char* kRngId = "philox4x32-10/v1";

// Error taxonomy shared across modules. The CLI maps codes to exit status:
// validation problems -> 2, unsupported size/method -> 3.
class Error : public std::runtime_error {
 public:
  enum class Code {
    invalid_model,
    missing_delta,
    domain,
    range,
    unsupported_method,
    unsupported_size,
    io,
  };

  Error(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Code code() const noexcept { return code_; }

  static Error invalid_model(const std::string& w) { return {Code::invalid_model, w}; }
  static Error missing_delta(const std::string& w) { return {Code::missing_delta, w}; }
  static Error domain(const std::string& w) { return {Code::domain, w}; }
  static Error range(const std::string& w) { return {Code::range, w}; }
  static Error unsupported_method(const std::string& w) { return {Code::unsupported_method, w}; }
  static Error unsupported_size(const std::string& w) { return {Code::unsupported_size, w}; }
  static Error io(const std::string& w) { return {Code::io, w}; }

 private:
  Code code_;
};

// Neumaier-compensated accumulator for long mixed-sign sums.
struct Kahan {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) noexcept {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }

  double value() const noexcept { return sum + comp; }
};

}  // namespace mdtk
