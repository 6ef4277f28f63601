#include "serouter/decimal.hpp"

#include <cmath>
#include <cstdlib>

#include "serouter/errors.hpp"

namespace serouter {

Usd Usd::parse(std::string_view text) {
  auto fail = [&] { return Error(ErrorCode::InvalidArgument, "bad decimal '" + std::string(text) + "'"); };
  if (text.empty()) throw fail();
  bool negative = false;
  std::size_t pos = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    pos = 1;
  }
  std::int64_t whole = 0;
  std::int64_t frac = 0;
  int frac_digits = 0;
  bool seen_dot = false;
  bool seen_digit = false;
  for (; pos < text.size(); ++pos) {
    char c = text[pos];
    if (c == '.') {
      if (seen_dot) throw fail();
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') throw fail();
    seen_digit = true;
    int digit = c - '0';
    if (seen_dot) {
      if (++frac_digits > kScaleDigits) throw fail();
      frac = frac * 10 + digit;
    } else {
      if (__builtin_mul_overflow(whole, 10, &whole) || __builtin_add_overflow(whole, digit, &whole)) {
        throw fail();
      }
    }
  }
  if (!seen_digit) throw fail();
  for (int i = frac_digits; i < kScaleDigits; ++i) frac *= 10;
  std::int64_t pico = 0;
  if (__builtin_mul_overflow(whole, kScale, &pico) || __builtin_add_overflow(pico, frac, &pico)) {
    throw fail();
  }
  return Usd(negative ? -pico : pico);
}

Usd Usd::from_double(double value) {
  if (!std::isfinite(value) || std::fabs(value) > 9.0e6) {
    throw Error(ErrorCode::InvalidArgument, "price out of range");
  }
  return Usd(std::llround(value * static_cast<double>(kScale)));
}

std::string Usd::to_string() const {
  std::int64_t magnitude = pico_ < 0 ? -pico_ : pico_;
  std::string frac = std::to_string(magnitude % kScale);
  frac.insert(0, kScaleDigits - frac.size(), '0');
  while (frac.size() > 1 && frac.back() == '0') frac.pop_back();
  return (pico_ < 0 ? "-" : "") + std::to_string(magnitude / kScale) + "." + frac;
}

Usd Usd::operator+(Usd other) const {
  std::int64_t sum = 0;
  if (__builtin_add_overflow(pico_, other.pico_, &sum)) {
    throw Error(ErrorCode::InvalidArgument, "USD overflow");
  }
  return Usd(sum);
}

Usd Usd::operator*(std::int64_t count) const {
  std::int64_t product = 0;
  if (__builtin_mul_overflow(pico_, count, &product)) {
    throw Error(ErrorCode::InvalidArgument, "USD overflow");
  }
  return Usd(product);
}

}  // namespace serouter
