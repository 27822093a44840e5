#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace ultraco {

/// An exact non-negative dyadic radius: either 0 or 2^(-exponent).
///
/// Ordering follows the numeric value, so a larger exponent is a smaller
/// radius and zero precedes everything.
class Dyadic {
public:
  constexpr Dyadic() = default;

  static constexpr Dyadic zero() { return Dyadic{}; }
  static constexpr Dyadic inverse_power_of_two(std::uint32_t exponent) {
    Dyadic d;
    d.zero_ = false;
    d.exponent_ = exponent;
    return d;
  }

  [[nodiscard]] constexpr bool is_zero() const { return zero_; }
  [[nodiscard]] constexpr std::uint32_t exponent() const { return exponent_; }

  [[nodiscard]] double to_double() const;

  /// "0", "1", or "2^-k".
  [[nodiscard]] std::string to_string() const;

  friend constexpr bool operator==(const Dyadic &, const Dyadic &) = default;
  friend constexpr std::strong_ordering operator<=>(const Dyadic &a,
                                                    const Dyadic &b) {
    if (a.zero_ || b.zero_)
      return b.zero_ <=> a.zero_;
    return b.exponent_ <=> a.exponent_;
  }

private:
  bool zero_ = true;
  std::uint32_t exponent_ = 0;
};

} // namespace ultraco
