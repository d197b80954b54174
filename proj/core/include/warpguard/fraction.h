#ifndef WARPGUARD_FRACTION_H_
#define WARPGUARD_FRACTION_H_

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace warpguard {

// Exact rational number with a positive denominator, always kept in lowest
// terms. Resilience fractions, thresholds and savings are carried as
// Fractions so that comparisons such as `sdc <= tau` never depend on
// floating-point rounding.
class Fraction {
 public:
  constexpr Fraction() = default;
  Fraction(std::int64_t num, std::int64_t den = 1);  // NOLINT: implicit from integers is intended

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  // Parses "0.05", "1", "3.6e-2", "-0.5". Short decimals are taken exactly.
  // Decimals with more than 15 significant digits are read as the simplest
  // rational inside their rounding interval, which recovers count ratios
  // (e.g. 1/3) rendered by to_decimal().
  static Fraction parse_decimal(std::string_view text);

  // Exact when the value has a terminating decimal expansion, otherwise 17
  // significant digits. parse_decimal(to_decimal(x)) == x for denominators
  // below ~1e8.
  std::string to_decimal() const;

  // Value * 100 rounded half-to-even to `decimals` places: 464/512 -> "90.62".
  std::string to_percent(int decimals = 2) const;

  friend Fraction operator+(const Fraction& a, const Fraction& b);
  friend Fraction operator-(const Fraction& a, const Fraction& b);
  friend Fraction operator*(const Fraction& a, const Fraction& b);
  friend Fraction operator/(const Fraction& a, const Fraction& b);
  Fraction operator-() const { return Fraction(-num_, den_); }

  friend bool operator==(const Fraction& a, const Fraction& b) = default;
  friend std::strong_ordering operator<=>(const Fraction& a, const Fraction& b);

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace warpguard

#endif  // WARPGUARD_FRACTION_H_
