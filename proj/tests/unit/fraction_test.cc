#include "warpguard/fraction.h"

#include <gtest/gtest.h>

#include <stdexcept>

#include "test_support.h"

namespace warpguard {
namespace {

TEST(Fraction, NormalizesSignAndGcd) {
  Fraction f(6, -8);
  EXPECT_EQ(f.num(), -3);
  EXPECT_EQ(f.den(), 4);
  EXPECT_EQ(Fraction(0, 5), Fraction(0));
  EXPECT_THROW(Fraction(1, 0), std::invalid_argument);
}

TEST(Fraction, Arithmetic) {
  EXPECT_EQ(Fraction(1, 3) + Fraction(1, 6), Fraction(1, 2));
  EXPECT_EQ(Fraction(1, 3) - Fraction(1, 2), Fraction(-1, 6));
  EXPECT_EQ(Fraction(2, 3) * Fraction(9, 4), Fraction(3, 2));
  EXPECT_EQ(Fraction(2, 3) / Fraction(4, 9), Fraction(3, 2));
  EXPECT_THROW(Fraction(1) / Fraction(0), std::domain_error);
  EXPECT_LT(Fraction(1, 3), Fraction(1, 2));
  EXPECT_GT(Fraction(-1, 3), Fraction(-1, 2));
}

TEST(Fraction, ParseDecimal) {
  EXPECT_EQ(Fraction::parse_decimal("0.05"), Fraction(1, 20));
  EXPECT_EQ(Fraction::parse_decimal("1"), Fraction(1));
  EXPECT_EQ(Fraction::parse_decimal("3.6e-2"), Fraction(36, 1000));
  EXPECT_EQ(Fraction::parse_decimal("-0.5"), Fraction(-1, 2));
  EXPECT_EQ(Fraction::parse_decimal("0.6382"), Fraction(6382, 10000));
  EXPECT_THROW(Fraction::parse_decimal(""), std::invalid_argument);
  EXPECT_THROW(Fraction::parse_decimal("abc"), std::invalid_argument);
  EXPECT_THROW(Fraction::parse_decimal("1.2.3"), std::invalid_argument);
}

TEST(Fraction, ToDecimal) {
  EXPECT_EQ(Fraction(1, 20).to_decimal(), "0.05");
  EXPECT_EQ(Fraction(0).to_decimal(), "0");
  EXPECT_EQ(Fraction(-3, 8).to_decimal(), "-0.375");
  EXPECT_EQ(Fraction(7).to_decimal(), "7");
}

TEST(Fraction, PercentRoundsHalfToEven) {
  // Characterization-table style renderings.
  EXPECT_EQ(Fraction(464, 512).to_percent(), "90.62");  // 90.625
  EXPECT_EQ(Fraction(14, 16).to_percent(), "87.50");
  EXPECT_EQ(Fraction(1, 3).to_percent(), "33.33");
  EXPECT_EQ(Fraction(2, 3).to_percent(), "66.67");
  EXPECT_EQ(Fraction(1, 8).to_percent(1), "12.5");
  EXPECT_EQ(Fraction(3, 16).to_percent(1), "18.8");   // 18.75 -> even 8
  EXPECT_EQ(Fraction(5, 16).to_percent(1), "31.2");   // 31.25 -> even 2
  EXPECT_EQ(Fraction(13, 25).to_percent(0), "52");
  EXPECT_EQ(Fraction(0).to_percent(), "0.00");
  EXPECT_EQ(Fraction(1).to_percent(), "100.00");
}

TEST(FractionProperty, DecimalRoundTrip) {
  testing::Gen gen(11);
  for (int i = 0; i < 5000; ++i) {
    const std::int64_t den = gen.range(1, 100'000'000);
    const std::int64_t num = gen.range(-den, den);
    const Fraction f(num, den);
    EXPECT_EQ(Fraction::parse_decimal(f.to_decimal()), f) << num << "/" << den << " -> " << f.to_decimal();
  }
}

TEST(FractionProperty, PercentMatchesIntegerOracle) {
  testing::Gen gen(12);
  for (int i = 0; i < 5000; ++i) {
    const std::int64_t den = gen.range(1, 100'000);
    const std::int64_t num = gen.range(0, den);
    // Oracle: scale by 10^4, round half to even with integer division.
    const std::int64_t scaled = num * 10000;
    std::int64_t q = scaled / den;
    const std::int64_t r = scaled % den;
    if (2 * r > den || (2 * r == den && q % 2 == 1)) ++q;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%02lld", static_cast<long long>(q / 100), static_cast<long long>(q % 100));
    EXPECT_EQ(Fraction(num, den).to_percent(), buf) << num << "/" << den;
  }
}

}  // namespace
}  // namespace warpguard
