#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <cstdint>
#include <span>
#include <string>
#include <variant>

namespace liftrc {

using BigInt = mpz_class;
using Rational = mpq_class;

enum class NumericMode { kExact, kLogspace };

struct NumericConfig {
  NumericMode mode = NumericMode::kExact;
  // Decimal digits carried by logspace numbers.
  int precision_digits = 50;
  // Exact-mode results of pow_big larger than this many bits are refused.
  std::uint64_t exact_bit_limit = std::uint64_t{1} << 22;

  // MPFR precision in bits for precision_digits, plus guard bits.
  mpfr_prec_t precision_bits() const;
};

// ---- Integer combinatorics -------------------------------------------------

// Throws InvalidArgumentError unless 0 <= k <= n.
BigInt binomial(const BigInt& n, const BigInt& k);
BigInt falling_factorial(const BigInt& n, const BigInt& k);
BigInt factorial(const BigInt& n);
// (p1 + ... + pm)! / (p1! ... pm!)
BigInt multinomial(std::span<const BigInt> parts);
// Exact integer power; the exponent must fit in an unsigned long.
BigInt ipow(const BigInt& base, unsigned long exponent);

// ---- BigFloat ---------------------------------------------------------------

// Owning MPFR value with an explicit precision.
class BigFloat {
 public:
  explicit BigFloat(mpfr_prec_t bits);
  BigFloat(mpfr_prec_t bits, const BigInt& value);
  BigFloat(mpfr_prec_t bits, const Rational& value);
  BigFloat(const BigFloat& other);
  BigFloat(BigFloat&& other) noexcept;
  BigFloat& operator=(const BigFloat& other);
  BigFloat& operator=(BigFloat&& other) noexcept;
  ~BigFloat();

  mpfr_prec_t precision() const { return mpfr_get_prec(value_); }
  mpfr_srcptr get() const { return value_; }
  mpfr_ptr get() { return value_; }

  BigFloat operator+(const BigFloat& rhs) const;
  BigFloat operator-(const BigFloat& rhs) const;
  BigFloat operator*(const BigFloat& rhs) const;
  BigFloat operator/(const BigFloat& rhs) const;
  bool operator==(const BigFloat& rhs) const { return mpfr_equal_p(value_, rhs.value_) != 0; }
  bool operator<(const BigFloat& rhs) const { return mpfr_less_p(value_, rhs.value_) != 0; }

  BigFloat log() const;
  BigFloat exp() const;
  BigFloat log1p() const;
  BigFloat abs() const;

  double to_double() const { return mpfr_get_d(value_, MPFR_RNDN); }
  // Scientific notation with the given number of significant digits.
  std::string to_string(int digits) const;
  // Exact hexadecimal rendering, used for cache keys.
  std::string exact_key() const;

 private:
  mpfr_t value_;
};

// ---- LogNumber ----------------------------------------------------------------

// A non-negative real stored as its natural logarithm; zero is a flag.
class LogNumber {
 public:
  static LogNumber zero(mpfr_prec_t bits);
  static LogNumber one(mpfr_prec_t bits);
  static LogNumber from_rational(const Rational& value, mpfr_prec_t bits);
  static LogNumber from_integer(const BigInt& value, mpfr_prec_t bits);
  static LogNumber from_log(BigFloat log_magnitude);

  bool is_zero() const { return zero_; }
  const BigFloat& log_magnitude() const { return log_; }

  LogNumber operator*(const LogNumber& rhs) const;
  LogNumber operator/(const LogNumber& rhs) const;
  LogNumber operator+(const LogNumber& rhs) const;
  LogNumber pow(const BigInt& exponent) const;
  bool operator==(const LogNumber& rhs) const;

 private:
  LogNumber(bool zero, BigFloat log) : zero_(zero), log_(std::move(log)) {}
  bool zero_;
  BigFloat log_;
};

// ---- Number ---------------------------------------------------------------------

// A value in either numeric mode; all operands of one computation share a mode.
class Number {
 public:
  static Number zero(const NumericConfig& cfg);
  static Number one(const NumericConfig& cfg);
  static Number from_rational(const Rational& value, const NumericConfig& cfg);
  static Number from_integer(const BigInt& value, const NumericConfig& cfg);

  explicit Number(Rational exact) : value_(std::move(exact)) { std::get<Rational>(value_).canonicalize(); }
  explicit Number(LogNumber log) : value_(std::move(log)) {}

  NumericMode mode() const {
    return std::holds_alternative<Rational>(value_) ? NumericMode::kExact : NumericMode::kLogspace;
  }
  bool is_zero() const;
  const Rational& exact() const;
  const LogNumber& log() const;

  Number operator+(const Number& rhs) const;
  Number operator*(const Number& rhs) const;
  Number operator/(const Number& rhs) const;
  Number& operator+=(const Number& rhs) { return *this = *this + rhs; }
  Number& operator*=(const Number& rhs) { return *this = *this * rhs; }
  bool operator==(const Number& rhs) const;

  // Natural log of the value (-inf not representable: zero throws).
  BigFloat log_magnitude(mpfr_prec_t bits = 256) const;
  double to_double() const;
  // "p/q" in exact mode, scientific decimal in logspace.
  std::string to_string() const;
  std::string to_decimal(int digits = 17) const;
  // Byte-exact rendering for cache keys.
  std::string key() const;

 private:
  friend Number pow_big(const Number&, const BigInt&, const NumericConfig&);
  // For results already in lowest terms; skips the gcd.
  struct Reduced {};
  Number(Reduced, Rational exact) : value_(std::move(exact)) {}

  std::variant<Rational, LogNumber> value_;
};

// base^exponent. Exact mode refuses results above cfg.exact_bit_limit
// (NumericGuardError); logspace multiplies the log. 0^0 == 1.
Number pow_big(const Number& base, const BigInt& exponent, const NumericConfig& cfg);

// Parses "p/q", "p", "0.25", "1e-3" as an exact rational.
Rational parse_rational(const std::string& text);
std::string to_string(const BigInt& value);
std::string to_string(const Rational& value);

}  // namespace liftrc
