#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace serouter {

// Exact fixed-point USD amount with 12 fractional digits (pico-dollars).
// Per-token prices are commonly quoted down to 1e-7 USD; 12 digits leaves
// headroom for multiplying by token counts without rounding.
class Usd {
 public:
  static constexpr int kScaleDigits = 12;
  static constexpr std::int64_t kScale = 1'000'000'000'000;

  constexpr Usd() = default;

  static constexpr Usd from_pico(std::int64_t pico) { return Usd(pico); }
  // Parses "12", "0.00003", "-1.5". More than 12 fractional digits is an error.
  static Usd parse(std::string_view text);
  // Nearest pico-dollar to a binary double; used only when a config file
  // carries prices as JSON numbers.
  static Usd from_double(double value);

  std::int64_t pico() const { return pico_; }
  double to_double() const { return static_cast<double>(pico_) / static_cast<double>(kScale); }
  // Canonical text: trailing zeros trimmed, at least one fractional digit.
  std::string to_string() const;

  Usd operator+(Usd other) const;
  Usd& operator+=(Usd other) { return *this = *this + other; }
  Usd operator*(std::int64_t count) const;

  auto operator<=>(const Usd&) const = default;

 private:
  constexpr explicit Usd(std::int64_t pico) : pico_(pico) {}
  std::int64_t pico_ = 0;
};

}  // namespace serouter
