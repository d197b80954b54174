#include "warpguard/fraction.h"

#include <cctype>
#include <limits>
#include <stdexcept>
#include <string>

namespace warpguard {
namespace {

__extension__ using i128 = __int128;

i128 abs128(i128 v) { return v < 0 ? -v : v; }

i128 gcd128(i128 a, i128 b) {
  a = abs128(a);
  b = abs128(b);
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

i128 pow10(int k) {
  i128 r = 1;
  for (int i = 0; i < k; ++i) r *= 10;
  return r;
}

std::string to_string128(i128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  v = abs128(v);
  std::string s;
  while (v > 0) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  if (neg) s.insert(s.begin(), '-');
  return s;
}

Fraction make(i128 num, i128 den) {
  if (den == 0) throw std::invalid_argument("fraction with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  i128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  constexpr i128 kMax = std::numeric_limits<std::int64_t>::max();
  if (abs128(num) > kMax || den > kMax) throw std::overflow_error("fraction exceeds 64-bit range");
  return Fraction(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

// Simplest rational p/q (smallest q) with a/b <= p/q <= c/d; all inputs >= 0.
void simplest_between(i128 a, i128 b, i128 c, i128 d, i128& p, i128& q) {
  i128 whole = a / b;
  if (whole * b == a) {
    p = whole;
    q = 1;
    return;
  }
  if ((whole + 1) * d <= c) {
    p = whole + 1;
    q = 1;
    return;
  }
  i128 p2 = 0;
  i128 q2 = 0;
  simplest_between(d, c - whole * d, b, a - whole * b, p2, q2);
  p = whole * p2 + q2;
  q = p2;
}

}  // namespace

Fraction::Fraction(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("fraction with zero denominator");
  i128 n = num;
  i128 d = den;
  if (d < 0) {
    n = -n;
    d = -d;
  }
  i128 g = gcd128(n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  num_ = static_cast<std::int64_t>(n);
  den_ = static_cast<std::int64_t>(d);
}

Fraction Fraction::parse_decimal(std::string_view text) {
  std::size_t i = 0;
  auto fail = [&]() -> Fraction {
    throw std::invalid_argument("malformed decimal '" + std::string(text) + "'");
  };
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  std::size_t end = text.size();
  while (end > i && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  bool negative = false;
  if (i < end && (text[i] == '+' || text[i] == '-')) {
    negative = text[i] == '-';
    ++i;
  }
  i128 mantissa = 0;
  int digits = 0;
  int significant = 0;
  int fraction_digits = 0;
  bool seen_point = false;
  bool any_digit = false;
  for (; i < end; ++i) {
    char ch = text[i];
    if (ch == '.') {
      if (seen_point) return fail();
      seen_point = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(ch))) break;
    any_digit = true;
    if (mantissa != 0 || ch != '0') ++significant;
    if (++digits > 36) return fail();
    mantissa = mantissa * 10 + (ch - '0');
    if (seen_point) ++fraction_digits;
  }
  if (!any_digit) return fail();
  int exponent = 0;
  if (i < end && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    bool exp_negative = false;
    if (i < end && (text[i] == '+' || text[i] == '-')) {
      exp_negative = text[i] == '-';
      ++i;
    }
    if (i == end) return fail();
    for (; i < end; ++i) {
      if (!std::isdigit(static_cast<unsigned char>(text[i]))) return fail();
      exponent = exponent * 10 + (text[i] - '0');
      if (exponent > 36) return fail();
    }
    if (exp_negative) exponent = -exponent;
  }
  if (i != end) return fail();

  int scale = fraction_digits - exponent;
  if (scale < 0) {
    if (digits - scale > 36) return fail();
    mantissa *= pow10(-scale);
    scale = 0;
  }
  if (scale > 37) return fail();
  i128 den = pow10(scale);
  if (negative) mantissa = -mantissa;
  if (significant <= 15 || scale == 0) return make(mantissa, den);

  // Long machine-rendered decimal: recover the simplest rational that would
  // print to the same digits.
  i128 m = abs128(mantissa);
  i128 p = 0;
  i128 q = 0;
  simplest_between(2 * m - 1, 2 * den, 2 * m + 1, 2 * den, p, q);
  return make(negative ? -p : p, q);
}

std::string Fraction::to_decimal() const {
  if (num_ == 0) return "0";
  std::string sign = num_ < 0 ? "-" : "";
  i128 n = abs128(num_);
  i128 d = den_;

  int twos = 0;
  int fives = 0;
  i128 rest = d;
  while (rest % 2 == 0) {
    rest /= 2;
    ++twos;
  }
  while (rest % 5 == 0) {
    rest /= 5;
    ++fives;
  }
  int places = twos > fives ? twos : fives;
  if (rest == 1 && places <= 30) {
    i128 scaled = n * (pow10(places) / d);
    std::string digits = to_string128(scaled);
    if (places == 0) return sign + digits;
    if (static_cast<int>(digits.size()) <= places) {
      digits.insert(0, static_cast<std::size_t>(places) - digits.size() + 1, '0');
    }
    digits.insert(digits.size() - static_cast<std::size_t>(places), ".");
    while (digits.back() == '0') digits.pop_back();
    if (digits.back() == '.') digits.pop_back();
    return sign + digits;
  }

  // Non-terminating: 17 significant digits, rounded half-up on the 18th.
  std::string integer = to_string128(n / d);
  i128 r = n % d;
  std::string frac;
  int significant = integer == "0" ? 0 : static_cast<int>(integer.size());
  while (significant < 18) {
    r *= 10;
    int digit = static_cast<int>(r / d);
    r %= d;
    frac.push_back(static_cast<char>('0' + digit));
    if (significant > 0 || digit != 0) ++significant;
  }
  std::string all = integer + frac;
  bool round_up = all.back() >= '5';
  all.pop_back();
  std::size_t int_len = integer.size();
  if (round_up) {
    std::size_t k = all.size();
    while (k > 0) {
      --k;
      if (all[k] == '9') {
        all[k] = '0';
      } else {
        ++all[k];
        break;
      }
      if (k == 0) {
        all.insert(all.begin(), '1');
        ++int_len;
      }
    }
  }
  // Trailing zeros stay: parse_decimal needs all 17 digits to tell this
  // apart from a short exact decimal.
  std::string out = all.substr(0, int_len);
  std::string tail = all.substr(int_len);
  if (!tail.empty()) out += "." + tail;
  return sign + out;
}

std::string Fraction::to_percent(int decimals) const {
  if (decimals < 0 || decimals > 12) throw std::invalid_argument("unsupported percent precision");
  i128 scale = pow10(2 + decimals);
  i128 n = static_cast<i128>(num_) * scale;
  i128 d = den_;
  bool negative = n < 0;
  n = abs128(n);
  i128 q = n / d;
  i128 r = n % d;
  if (2 * r > d || (2 * r == d && q % 2 == 1)) ++q;
  std::string digits = to_string128(q);
  if (decimals > 0) {
    if (static_cast<int>(digits.size()) <= decimals) {
      digits.insert(0, static_cast<std::size_t>(decimals) - digits.size() + 1, '0');
    }
    digits.insert(digits.size() - static_cast<std::size_t>(decimals), ".");
  }
  return (negative && q != 0 ? "-" : "") + digits;
}

Fraction operator+(const Fraction& a, const Fraction& b) {
  return make(static_cast<i128>(a.num_) * b.den_ + static_cast<i128>(b.num_) * a.den_,
              static_cast<i128>(a.den_) * b.den_);
}

Fraction operator-(const Fraction& a, const Fraction& b) {
  return make(static_cast<i128>(a.num_) * b.den_ - static_cast<i128>(b.num_) * a.den_,
              static_cast<i128>(a.den_) * b.den_);
}

Fraction operator*(const Fraction& a, const Fraction& b) {
  return make(static_cast<i128>(a.num_) * b.num_, static_cast<i128>(a.den_) * b.den_);
}

Fraction operator/(const Fraction& a, const Fraction& b) {
  if (b.num_ == 0) throw std::domain_error("division by zero fraction");
  return make(static_cast<i128>(a.num_) * b.den_, static_cast<i128>(a.den_) * b.num_);
}

std::strong_ordering operator<=>(const Fraction& a, const Fraction& b) {
  i128 lhs = static_cast<i128>(a.num_) * b.den_;
  i128 rhs = static_cast<i128>(b.num_) * a.den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

}  // namespace warpguard
