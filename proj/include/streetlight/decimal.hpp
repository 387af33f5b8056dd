#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace streetlight {

// Exact base-10 fixed point number: value = mantissa / 10^scale.
//
// Kept normalized (no trailing zeros in the fraction) so that two equal
// values always compare equal member-wise. Sums, differences, products and
// power-of-ten shifts are exact; division and rounding take an explicit
// number of decimal places and round half away from zero.
class Decimal {
 public:
  using Mantissa = __int128;
  static constexpr unsigned kMaxScale = 30;

  constexpr Decimal() = default;
  constexpr Decimal(std::int64_t v) : mantissa_(v) {}  // NOLINT: implicit from integers is intended

  static Decimal parse(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("empty decimal");
    bool negative = false;
    std::size_t i = 0;
    if (text[0] == '-' || text[0] == '+') {
      negative = text[0] == '-';
      ++i;
    }
    Mantissa m = 0;
    unsigned scale = 0;
    bool seen_point = false;
    bool seen_digit = false;
    for (; i < text.size(); ++i) {
      const char c = text[i];
      if (c == '.') {
        if (seen_point) throw std::invalid_argument("bad decimal: " + std::string(text));
        seen_point = true;
        continue;
      }
      if (c < '0' || c > '9') throw std::invalid_argument("bad decimal: " + std::string(text));
      seen_digit = true;
      m = checked_mul(m, 10) + (c - '0');
      if (seen_point && ++scale > kMaxScale) throw std::overflow_error("decimal scale overflow");
    }
    if (!seen_digit) throw std::invalid_argument("bad decimal: " + std::string(text));
    return Decimal(negative ? -m : m, scale);
  }

  constexpr Mantissa mantissa() const { return mantissa_; }
  constexpr unsigned scale() const { return scale_; }

  // value / 10^places, exact.
  Decimal shifted(unsigned places) const {
    if (scale_ + places > kMaxScale) throw std::overflow_error("decimal scale overflow");
    return Decimal(mantissa_, scale_ + places);
  }

  friend Decimal operator+(const Decimal& a, const Decimal& b) {
    const unsigned s = a.scale_ > b.scale_ ? a.scale_ : b.scale_;
    Mantissa r;
    if (__builtin_add_overflow(a.aligned(s), b.aligned(s), &r)) throw std::overflow_error("decimal add overflow");
    return Decimal(r, s);
  }
  friend Decimal operator-(const Decimal& a) { return Decimal(-a.mantissa_, a.scale_); }
  friend Decimal operator-(const Decimal& a, const Decimal& b) { return a + (-b); }
  friend Decimal operator*(const Decimal& a, const Decimal& b) {
    if (a.scale_ + b.scale_ > kMaxScale) throw std::overflow_error("decimal scale overflow");
    return Decimal(checked_mul(a.mantissa_, b.mantissa_), a.scale_ + b.scale_);
  }
  Decimal& operator+=(const Decimal& o) { return *this = *this + o; }
  Decimal& operator-=(const Decimal& o) { return *this = *this - o; }
  Decimal& operator*=(const Decimal& o) { return *this = *this * o; }

  friend bool operator==(const Decimal&, const Decimal&) = default;
  friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
    const unsigned s = a.scale_ > b.scale_ ? a.scale_ : b.scale_;
    const Mantissa x = a.aligned(s);
    const Mantissa y = b.aligned(s);
    if (x < y) return std::strong_ordering::less;
    if (x > y) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

  bool is_zero() const { return mantissa_ == 0; }
  bool is_negative() const { return mantissa_ < 0; }

  // Round half away from zero to `places` fractional digits.
  Decimal rounded(unsigned places) const {
    if (scale_ <= places) return *this;
    const Mantissa p = pow10(scale_ - places);
    Mantissa q = mantissa_ / p;
    const Mantissa r = mantissa_ % p;
    const Mantissa twice = (r < 0 ? -r : r) * 2;
    if (twice >= p) q += (mantissa_ < 0 ? -1 : 1);
    return Decimal(q, places);
  }

  // this / divisor, rounded half away from zero to `places` digits.
  Decimal divided(const Decimal& divisor, unsigned places) const {
    if (divisor.mantissa_ == 0) throw std::domain_error("decimal division by zero");
    // (m1/10^s1) / (m2/10^s2) = m1 * 10^(s2 + places + 1 - s1) / m2 / 10^(places + 1)
    const int exp = static_cast<int>(divisor.scale_) + static_cast<int>(places) + 1 - static_cast<int>(scale_);
    Mantissa num = mantissa_;
    Mantissa den = divisor.mantissa_;
    if (exp >= 0) {
      num = checked_mul(num, pow10(static_cast<unsigned>(exp)));
    } else {
      den = checked_mul(den, pow10(static_cast<unsigned>(-exp)));
    }
    return Decimal(num / den, places + 1).rounded(places);
  }

  double to_double() const {
    return static_cast<double>(mantissa_) / static_cast<double>(pow10(scale_));
  }

  // Exact shortest representation, e.g. "3.696", "62437.5", "-2".
  std::string to_string() const { return format(*this, scale_, false); }

  // Rounded to exactly `places` digits, e.g. to_fixed(2) of 3.696 -> "3.70".
  std::string to_fixed(unsigned places) const { return format(rounded(places), places, false); }

  // Like to_fixed but with thousands separators: 62437.5 -> "62,438".
  std::string to_grouped(unsigned places = 0) const { return format(rounded(places), places, true); }

 private:
  constexpr Decimal(Mantissa m, unsigned scale) : mantissa_(m), scale_(scale) { normalize(); }

  static constexpr Mantissa pow10(unsigned n) {
    Mantissa p = 1;
    for (unsigned i = 0; i < n; ++i) p *= 10;
    return p;
  }

  static Mantissa checked_mul(Mantissa a, Mantissa b) {
    Mantissa r;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("decimal multiply overflow");
    return r;
  }

  Mantissa aligned(unsigned s) const { return checked_mul(mantissa_, pow10(s - scale_)); }

  constexpr void normalize() {
    while (scale_ > 0 && mantissa_ % 10 == 0) {
      mantissa_ /= 10;
      --scale_;
    }
    if (mantissa_ == 0) scale_ = 0;
  }

  static std::string format(const Decimal& d, unsigned places, bool grouped) {
    Mantissa m = d.mantissa_ < 0 ? -d.mantissa_ : d.mantissa_;
    m *= pow10(places - d.scale_);
    std::string digits;
    do {
      digits.insert(digits.begin(), static_cast<char>('0' + static_cast<int>(m % 10)));
      m /= 10;
    } while (m != 0);
    while (digits.size() <= places) digits.insert(digits.begin(), '0');
    std::string whole = digits.substr(0, digits.size() - places);
    if (grouped) {
      for (int i = static_cast<int>(whole.size()) - 3; i > 0; i -= 3) whole.insert(static_cast<std::size_t>(i), ",");
    }
    std::string out = d.mantissa_ < 0 ? "-" + whole : whole;
    if (places > 0) out += "." + digits.substr(digits.size() - places);
    return out;
  }

  Mantissa mantissa_ = 0;
  unsigned scale_ = 0;
};

}  // namespace streetlight
