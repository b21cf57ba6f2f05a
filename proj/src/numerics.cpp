#include "liftrc/numerics.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "liftrc/errors.hpp"

namespace liftrc {

mpfr_prec_t NumericConfig::precision_bits() const {
  const int digits = precision_digits < 1 ? 1 : precision_digits;
  return static_cast<mpfr_prec_t>(std::ceil(digits * 3.3219280948873623)) + 32;
}

// ---- Integer combinatorics -------------------------------------------------

namespace {

void check_range(const BigInt& n, const BigInt& k, const char* what) {
  if (k < 0 || n < 0 || k > n) {
    throw InvalidArgumentError(std::string(what) + ": need 0 <= k <= n, got n=" + n.get_str() +
                               " k=" + k.get_str());
  }
}

}  // namespace

BigInt binomial(const BigInt& n, const BigInt& k) {
  check_range(n, k, "binomial");
  if (!k.fits_ulong_p()) {
    // k > ULONG_MAX only makes sense when n-k is small.
    return binomial(n, n - k);
  }
  BigInt out;
  mpz_bin_ui(out.get_mpz_t(), n.get_mpz_t(), k.get_ui());
  return out;
}

BigInt falling_factorial(const BigInt& n, const BigInt& k) {
  check_range(n, k, "falling_factorial");
  BigInt out = 1;
  for (BigInt i = 0; i < k; ++i) out *= n - i;
  return out;
}

BigInt factorial(const BigInt& n) {
  if (n < 0 || !n.fits_ulong_p()) throw InvalidArgumentError("factorial: argument out of range");
  BigInt out;
  mpz_fac_ui(out.get_mpz_t(), n.get_ui());
  return out;
}

BigInt multinomial(std::span<const BigInt> parts) {
  BigInt total = 0;
  BigInt out = 1;
  for (const BigInt& p : parts) {
    if (p < 0) throw InvalidArgumentError("multinomial: negative part");
    total += p;
    out *= binomial(total, p);
  }
  return out;
}

BigInt ipow(const BigInt& base, unsigned long exponent) {
  BigInt out;
  mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), exponent);
  return out;
}

// ---- BigFloat ---------------------------------------------------------------

BigFloat::BigFloat(mpfr_prec_t bits) {
  mpfr_init2(value_, bits);
  mpfr_set_zero(value_, 1);
}

BigFloat::BigFloat(mpfr_prec_t bits, const BigInt& value) {
  mpfr_init2(value_, bits);
  mpfr_set_z(value_, value.get_mpz_t(), MPFR_RNDN);
}

BigFloat::BigFloat(mpfr_prec_t bits, const Rational& value) {
  mpfr_init2(value_, bits);
  mpfr_set_q(value_, value.get_mpq_t(), MPFR_RNDN);
}

BigFloat::BigFloat(const BigFloat& other) {
  mpfr_init2(value_, other.precision());
  mpfr_set(value_, other.value_, MPFR_RNDN);
}

BigFloat::BigFloat(BigFloat&& other) noexcept {
  mpfr_init2(value_, MPFR_PREC_MIN);
  mpfr_swap(value_, other.value_);
}

BigFloat& BigFloat::operator=(const BigFloat& other) {
  if (this != &other) {
    mpfr_set_prec(value_, other.precision());
    mpfr_set(value_, other.value_, MPFR_RNDN);
  }
  return *this;
}

BigFloat& BigFloat::operator=(BigFloat&& other) noexcept {
  mpfr_swap(value_, other.value_);
  return *this;
}

BigFloat::~BigFloat() { mpfr_clear(value_); }

namespace {

mpfr_prec_t max_prec(const BigFloat& a, const BigFloat& b) {
  return a.precision() > b.precision() ? a.precision() : b.precision();
}

}  // namespace

BigFloat BigFloat::operator+(const BigFloat& rhs) const {
  BigFloat out(max_prec(*this, rhs));
  mpfr_add(out.value_, value_, rhs.value_, MPFR_RNDN);
  return out;
}

BigFloat BigFloat::operator-(const BigFloat& rhs) const {
  BigFloat out(max_prec(*this, rhs));
  mpfr_sub(out.value_, value_, rhs.value_, MPFR_RNDN);
  return out;
}

BigFloat BigFloat::operator*(const BigFloat& rhs) const {
  BigFloat out(max_prec(*this, rhs));
  mpfr_mul(out.value_, value_, rhs.value_, MPFR_RNDN);
  return out;
}

BigFloat BigFloat::operator/(const BigFloat& rhs) const {
  BigFloat out(max_prec(*this, rhs));
  mpfr_div(out.value_, value_, rhs.value_, MPFR_RNDN);
  return out;
}

BigFloat BigFloat::log() const {
  BigFloat out(precision());
  mpfr_log(out.value_, value_, MPFR_RNDN);
  return out;
}

BigFloat BigFloat::exp() const {
  BigFloat out(precision());
  mpfr_exp(out.value_, value_, MPFR_RNDN);
  return out;
}

BigFloat BigFloat::log1p() const {
  BigFloat out(precision());
  mpfr_log1p(out.value_, value_, MPFR_RNDN);
  return out;
}

BigFloat BigFloat::abs() const {
  BigFloat out(precision());
  mpfr_abs(out.value_, value_, MPFR_RNDN);
  return out;
}

std::string BigFloat::to_string(int digits) const {
  char* raw = nullptr;
  if (mpfr_asprintf(&raw, "%.*Rg", digits, value_) < 0) throw InternalError("mpfr_asprintf failed");
  std::string out(raw);
  mpfr_free_str(raw);
  return out;
}

std::string BigFloat::exact_key() const {
  char* raw = nullptr;
  if (mpfr_asprintf(&raw, "%Ra", value_) < 0) throw InternalError("mpfr_asprintf failed");
  std::string out(raw);
  mpfr_free_str(raw);
  return out;
}

// ---- LogNumber ----------------------------------------------------------------

LogNumber LogNumber::zero(mpfr_prec_t bits) { return LogNumber(true, BigFloat(bits)); }

LogNumber LogNumber::one(mpfr_prec_t bits) { return LogNumber(false, BigFloat(bits)); }

LogNumber LogNumber::from_rational(const Rational& value, mpfr_prec_t bits) {
  if (sgn(value) < 0) throw InvalidArgumentError("logspace values must be non-negative");
  if (sgn(value) == 0) return zero(bits);
  // log(p) - log(q) keeps full relative precision for huge p and q.
  BigFloat num(bits, BigInt(value.get_num()));
  BigFloat den(bits, BigInt(value.get_den()));
  return LogNumber(false, num.log() - den.log());
}

LogNumber LogNumber::from_integer(const BigInt& value, mpfr_prec_t bits) {
  if (sgn(value) < 0) throw InvalidArgumentError("logspace values must be non-negative");
  if (sgn(value) == 0) return zero(bits);
  return LogNumber(false, BigFloat(bits, value).log());
}

LogNumber LogNumber::from_log(BigFloat log_magnitude) {
  return LogNumber(false, std::move(log_magnitude));
}

LogNumber LogNumber::operator*(const LogNumber& rhs) const {
  if (zero_ || rhs.zero_) return zero(max_prec(log_, rhs.log_));
  return LogNumber(false, log_ + rhs.log_);
}

LogNumber LogNumber::operator/(const LogNumber& rhs) const {
  if (rhs.zero_) throw InvalidArgumentError("division by zero");
  if (zero_) return *this;
  return LogNumber(false, log_ - rhs.log_);
}

LogNumber LogNumber::operator+(const LogNumber& rhs) const {
  if (zero_) return rhs;
  if (rhs.zero_) return *this;
  const bool this_larger = rhs.log_ < log_;
  const BigFloat& hi = this_larger ? log_ : rhs.log_;
  const BigFloat& lo = this_larger ? rhs.log_ : log_;
  return LogNumber(false, hi + (lo - hi).exp().log1p());
}

LogNumber LogNumber::pow(const BigInt& exponent) const {
  if (sgn(exponent) < 0) throw InvalidArgumentError("negative exponent");
  if (sgn(exponent) == 0) return one(log_.precision());
  if (zero_) return *this;
  return LogNumber(false, log_ * BigFloat(log_.precision(), exponent));
}

bool LogNumber::operator==(const LogNumber& rhs) const {
  if (zero_ || rhs.zero_) return zero_ == rhs.zero_;
  return log_ == rhs.log_;
}

// ---- Number ---------------------------------------------------------------------

Number Number::zero(const NumericConfig& cfg) {
  if (cfg.mode == NumericMode::kExact) return Number(Rational(0));
  return Number(LogNumber::zero(cfg.precision_bits()));
}

Number Number::one(const NumericConfig& cfg) {
  if (cfg.mode == NumericMode::kExact) return Number(Rational(1));
  return Number(LogNumber::one(cfg.precision_bits()));
}

Number Number::from_rational(const Rational& value, const NumericConfig& cfg) {
  if (sgn(value) < 0) throw InvalidArgumentError("potentials must be non-negative");
  if (cfg.mode == NumericMode::kExact) return Number(value);
  return Number(LogNumber::from_rational(value, cfg.precision_bits()));
}

Number Number::from_integer(const BigInt& value, const NumericConfig& cfg) {
  if (cfg.mode == NumericMode::kExact) return Number(Rational(value));
  return Number(LogNumber::from_integer(value, cfg.precision_bits()));
}

bool Number::is_zero() const {
  if (const auto* r = std::get_if<Rational>(&value_)) return sgn(*r) == 0;
  return std::get<LogNumber>(value_).is_zero();
}

const Rational& Number::exact() const {
  if (const auto* r = std::get_if<Rational>(&value_)) return *r;
  throw InvalidArgumentError("number is not in exact mode");
}

const LogNumber& Number::log() const {
  if (const auto* l = std::get_if<LogNumber>(&value_)) return *l;
  throw InvalidArgumentError("number is not in logspace mode");
}

namespace {

void require_same_mode(const Number& a, const Number& b) {
  if (a.mode() != b.mode()) throw InternalError("mixed numeric modes in one computation");
}

}  // namespace

Number Number::operator+(const Number& rhs) const {
  require_same_mode(*this, rhs);
  if (mode() == NumericMode::kExact) return Number(Reduced{}, Rational(exact() + rhs.exact()));
  return Number(log() + rhs.log());
}

Number Number::operator*(const Number& rhs) const {
  require_same_mode(*this, rhs);
  if (mode() == NumericMode::kExact) return Number(Reduced{}, Rational(exact() * rhs.exact()));
  return Number(log() * rhs.log());
}

Number Number::operator/(const Number& rhs) const {
  require_same_mode(*this, rhs);
  if (rhs.is_zero()) throw InvalidArgumentError("division by zero");
  if (mode() == NumericMode::kExact) return Number(Reduced{}, Rational(exact() / rhs.exact()));
  return Number(log() / rhs.log());
}

bool Number::operator==(const Number& rhs) const {
  if (mode() != rhs.mode()) return false;
  if (mode() == NumericMode::kExact) return exact() == rhs.exact();
  return log() == rhs.log();
}

BigFloat Number::log_magnitude(mpfr_prec_t bits) const {
  if (is_zero()) throw InvalidArgumentError("log of zero");
  if (mode() == NumericMode::kLogspace) return log().log_magnitude();
  return LogNumber::from_rational(exact(), bits).log_magnitude();
}

double Number::to_double() const {
  if (mode() == NumericMode::kExact) return exact().get_d();
  if (log().is_zero()) return 0.0;
  return std::exp(log().log_magnitude().to_double());
}

std::string Number::to_string() const {
  if (mode() == NumericMode::kExact) return liftrc::to_string(exact());
  return to_decimal(20);
}

std::string Number::to_decimal(int digits) const {
  if (is_zero()) return "0";
  if (mode() == NumericMode::kExact) return BigFloat(256, exact()).to_string(digits);
  const BigFloat& lg = log().log_magnitude();
  BigFloat bound(lg.precision(), BigInt(1000000));
  if (lg.abs() < bound) return lg.exp().to_string(digits);
  // Too large for an MPFR exponent: print as e^x.
  return "exp(" + lg.to_string(digits) + ")";
}

std::string Number::key() const {
  if (mode() == NumericMode::kExact) return liftrc::to_string(exact());
  if (log().is_zero()) return "z";
  return log().log_magnitude().exact_key();
}

Number pow_big(const Number& base, const BigInt& exponent, const NumericConfig& cfg) {
  if (sgn(exponent) < 0) throw InvalidArgumentError("pow_big: negative exponent");
  if (sgn(exponent) == 0) return Number::one(cfg);
  if (base.mode() == NumericMode::kLogspace) return Number(base.log().pow(exponent));
  const Rational& b = base.exact();
  if (sgn(b) == 0 || b == 1) return base;
  const std::size_t base_bits = mpz_sizeinbase(b.get_num_mpz_t(), 2) + mpz_sizeinbase(b.get_den_mpz_t(), 2);
  const BigInt estimate = exponent * BigInt(static_cast<unsigned long>(base_bits));
  if (!exponent.fits_ulong_p() || estimate > BigInt(std::to_string(cfg.exact_bit_limit))) {
    throw NumericGuardError("exact result of power with exponent " + exponent.get_str() +
                            " exceeds the size guard; use logspace mode");
  }
  // Powers of a reduced fraction stay reduced.
  Rational out(ipow(BigInt(b.get_num()), exponent.get_ui()), ipow(BigInt(b.get_den()), exponent.get_ui()));
  return Number(Number::Reduced{}, std::move(out));
}

Rational parse_rational(const std::string& text) {
  if (text.empty()) throw InvalidArgumentError("empty number");
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    Rational out;
    if (out.set_str(text, 10) != 0 || out.get_den() == 0) throw InvalidArgumentError("bad rational '" + text + "'");
    out.canonicalize();
    return out;
  }
  // decimal with optional fraction and exponent
  std::size_t pos = 0;
  bool negative = false;
  if (text[pos] == '+' || text[pos] == '-') negative = text[pos++] == '-';
  std::string digits;
  long scale = 0;
  bool any = false;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
    digits += text[pos++];
    any = true;
  }
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      digits += text[pos++];
      --scale;
      any = true;
    }
  }
  if (!any) throw InvalidArgumentError("bad number '" + text + "'");
  if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
    ++pos;
    std::string exp_text = text.substr(pos);
    if (exp_text.empty()) throw InvalidArgumentError("bad exponent in '" + text + "'");
    std::size_t used = 0;
    long e = 0;
    try {
      e = std::stol(exp_text, &used);
    } catch (const std::exception&) {
      throw InvalidArgumentError("bad exponent in '" + text + "'");
    }
    if (used != exp_text.size() || e > 100000 || e < -100000) throw InvalidArgumentError("bad exponent in '" + text + "'");
    scale += e;
    pos = text.size();
  }
  if (pos != text.size()) throw InvalidArgumentError("bad number '" + text + "'");
  BigInt mant(digits, 10);
  if (negative) mant = -mant;
  Rational out;
  if (scale >= 0) {
    out = Rational(mant * ipow(BigInt(10), static_cast<unsigned long>(scale)));
  } else {
    out = Rational(mant, ipow(BigInt(10), static_cast<unsigned long>(-scale)));
  }
  out.canonicalize();
  return out;
}

std::string to_string(const BigInt& value) { return value.get_str(); }

std::string to_string(const Rational& value) { return value.get_str(); }

}  // namespace liftrc
