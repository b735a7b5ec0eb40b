#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace toricbern {

/// Exact rational number with 64-bit numerator and denominator.
///
/// Always normalized: gcd(num, den) == 1 and den > 0. Arithmetic is carried out
/// in 128-bit intermediates; results that do not fit in 64 bits throw
/// std::overflow_error. Polytope offsets at desk scale stay far from that.
class Rational {
public:
  constexpr Rational() = default;
  Rational(std::int64_t value) : num_(value) {}  // NOLINT(google-explicit-constructor)
  Rational(std::int64_t num, std::int64_t den);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool is_integer() const noexcept { return den_ == 1; }

  /// Accepts "7", "-3/4", "0.125", "1.5e-2". Decimal forms are converted exactly.
  static Rational parse(std::string_view text);
  /// Exact rational for the shortest decimal that round-trips to `value`.
  static Rational from_double(double value);

  std::string to_string() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  Rational operator-() const;

  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

private:
  static Rational make(__int128 num, __int128 den);

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

std::int64_t floor_div(const Rational& r);
std::int64_t ceil_div(const Rational& r);

}  // namespace toricbern
