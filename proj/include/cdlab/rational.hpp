#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>

namespace cdlab {

/// Exact rational arithmetic (GMP). Every carpet mass, LP value and dyadic
/// endpoint in the library is one of these.
using Rational = mpq_class;

inline Rational pow_rational(const Rational& base, unsigned exponent) {
  Rational out(1);
  Rational b = base;
  while (exponent) {
    if (exponent & 1u) out *= b;
    b *= b;
    exponent >>= 1;
  }
  return out;
}

/// 1 / base^exponent for a positive integer base.
inline Rational inverse_power(std::int64_t base, unsigned exponent) {
  mpz_class den;
  mpz_ui_pow_ui(den.get_mpz_t(), static_cast<unsigned long>(base), exponent);
  return Rational(mpz_class(1), den);
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

inline double to_double(const Rational& q) { return q.get_d(); }

/// Parses "p/q" or an integer literal.
inline Rational parse_rational(const std::string& text) {
  Rational q(text);
  q.canonicalize();
  return q;
}

/// True when q = i / base^n for some integers i, n >= 0.
inline bool is_adic(const Rational& q, std::int64_t base) {
  mpz_class den = q.get_den();
  mpz_class b = base;
  mpz_class g;
  while (den != 1) {
    mpz_gcd(g.get_mpz_t(), den.get_mpz_t(), b.get_mpz_t());
    if (g == 1) return false;
    den /= g;
  }
  return true;
}

}  // namespace cdlab
