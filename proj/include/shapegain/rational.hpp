#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "shapegain/errors.hpp"

namespace shapegain {

// FEC code rate K/N. Kept rational so that (2m - n_d) * R is exact for
// dyadic rates such as 3/4.
struct Rational {
  std::int64_t num = 3;
  std::int64_t den = 4;

  constexpr double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  // Product with an integer, rounded once.
  constexpr double times(std::int64_t k) const {
    return static_cast<double>(k * num) / static_cast<double>(den);
  }

  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }

  friend constexpr bool operator==(const Rational&, const Rational&) = default;

  // Accepts "K/N" or a plain integer; the rate must lie in (0, 1].
  static Rational parse(const std::string& text) {
    Rational r;
    try {
      const auto slash = text.find('/');
      std::size_t used = 0;
      if (slash == std::string::npos) {
        r.num = std::stoll(text, &used);
        r.den = 1;
        if (used != text.size()) throw ParameterError("trailing characters");
      } else {
        const std::string a = text.substr(0, slash);
        const std::string b = text.substr(slash + 1);
        r.num = std::stoll(a, &used);
        if (used != a.size()) throw ParameterError("trailing characters");
        r.den = std::stoll(b, &used);
        if (used != b.size()) throw ParameterError("trailing characters");
      }
    } catch (const std::logic_error&) {
      throw ParameterError("invalid rational '" + text + "', expected K/N");
    } catch (const ParameterError&) {
      throw ParameterError("invalid rational '" + text + "', expected K/N");
    }
    r.validate();
    return r.reduced();
  }

  void validate() const {
    if (den <= 0 || num <= 0 || num > den) {
      throw ParameterError("FEC rate " + str() + " outside (0, 1]");
    }
  }

  Rational reduced() const {
    const auto g = std::gcd(num, den);
    return g == 0 ? *this : Rational{num / g, den / g};
  }
};

}  // namespace shapegain
