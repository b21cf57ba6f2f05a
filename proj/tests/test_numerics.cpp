#include <doctest.h>

#include <vector>

#include "liftrc/errors.hpp"
#include "liftrc/numerics.hpp"

using namespace liftrc;

namespace {

BigInt pascal(unsigned n, unsigned k) {
  std::vector<BigInt> row{1};
  for (unsigned i = 1; i <= n; ++i) {
    std::vector<BigInt> next(i + 1, 1);
    for (unsigned j = 1; j < i; ++j) next[j] = row[j - 1] + row[j];
    row = std::move(next);
  }
  return row[k];
}

NumericConfig logspace(int digits = 50) {
  NumericConfig c;
  c.mode = NumericMode::kLogspace;
  c.precision_digits = digits;
  return c;
}

}  // namespace

TEST_CASE("binomial coefficients") {
  CHECK(binomial(4, 2) == 6);
  CHECK(binomial(17, 0) == 1);
  CHECK(binomial(30, 15) == 155117520);
  for (unsigned n = 0; n <= 20; ++n)
    for (unsigned k = 0; k <= n; ++k) CHECK(binomial(n, k) == pascal(n, k));
  CHECK_THROWS_AS(binomial(3, 4), InvalidArgumentError);
  CHECK_THROWS_AS(binomial(3, -1), InvalidArgumentError);
}

TEST_CASE("falling factorials and multinomials") {
  CHECK(falling_factorial(5, 2) == 20);
  CHECK(falling_factorial(9, 0) == 1);
  CHECK(falling_factorial(7, 3) == 210);
  CHECK(factorial(10) == 3628800);
  CHECK_THROWS_AS(falling_factorial(2, 3), InvalidArgumentError);

  const std::vector<BigInt> parts{2, 1, 3};
  CHECK(multinomial(parts) == 60);
  const std::vector<BigInt> none;
  CHECK(multinomial(none) == 1);
  CHECK(ipow(3, 4) == 81);
  // n!/(n-k)! for a population far beyond machine words
  const BigInt n("1000000000000");
  CHECK(falling_factorial(n, 2) == n * (n - 1));
}

TEST_CASE("exact powers and the size guard") {
  const NumericConfig exact;
  CHECK(pow_big(Number(Rational(1, 2)), 3, exact) == Number(Rational(1, 8)));
  CHECK(pow_big(Number(Rational(5, 7)), 0, exact) == Number(Rational(1)));
  CHECK(pow_big(Number(Rational(0)), 0, exact) == Number(Rational(1)));
  CHECK(pow_big(Number(Rational(0)), 5, exact).is_zero());
  CHECK_THROWS_AS(pow_big(Number(Rational(9, 10)), BigInt("499999500000"), exact), NumericGuardError);
}

TEST_CASE("logspace powers with huge exponents") {
  const NumericConfig cfg = logspace();
  const BigInt e = BigInt(1000000) * 999999 / 2;
  const Number p = pow_big(Number::from_rational(Rational(9, 10), cfg), e, cfg);

  // e * ln(0.9) computed directly with MPFR at a higher precision.
  mpfr_t ref, got, diff;
  mpfr_inits2(400, ref, got, diff, static_cast<mpfr_ptr>(nullptr));
  mpfr_set_ui(ref, 9, MPFR_RNDN);
  mpfr_div_ui(ref, ref, 10, MPFR_RNDN);
  mpfr_log(ref, ref, MPFR_RNDN);
  mpfr_mul_z(ref, ref, e.get_mpz_t(), MPFR_RNDN);
  mpfr_set(got, p.log_magnitude(400).get(), MPFR_RNDN);
  mpfr_sub(diff, got, ref, MPFR_RNDN);
  mpfr_div(diff, diff, ref, MPFR_RNDN);
  mpfr_abs(diff, diff, MPFR_RNDN);
  CHECK(mpfr_get_d(diff, MPFR_RNDN) < 1e-40);
  mpfr_clears(ref, got, diff, static_cast<mpfr_ptr>(nullptr));
}

TEST_CASE("logspace arithmetic tracks exact arithmetic") {
  const NumericConfig cfg = logspace(30);
  const Number a = Number::from_rational(Rational(1, 3), cfg);
  const Number b = Number::from_rational(Rational(1, 6), cfg);
  CHECK((a + b).to_double() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK((a * b).to_double() == doctest::Approx(1.0 / 18).epsilon(1e-15));
  CHECK((a / b).to_double() == doctest::Approx(2.0).epsilon(1e-15));

  const Number zero = Number::zero(cfg);
  CHECK(zero.is_zero());
  CHECK((zero + a) == a);
  CHECK((zero * a).is_zero());
  CHECK_THROWS(zero.log_magnitude());
  CHECK(Number::one(cfg).log_magnitude().to_double() == 0.0);
}

TEST_CASE("number rendering and keys") {
  const Number third(Rational(2, 6));
  CHECK(third.to_string() == "1/3");
  CHECK(third.to_decimal(5).rfind("0.3333", 0) == 0);
  CHECK(third.key() == Number(Rational(1, 3)).key());
  CHECK(third.key() != Number(Rational(1, 4)).key());
  CHECK(Number::from_integer(12, NumericConfig{}).to_string() == "12");
}

TEST_CASE("rational literals") {
  CHECK(parse_rational("3/6") == Rational(1, 2));
  CHECK(parse_rational("0.25") == Rational(1, 4));
  CHECK(parse_rational("1e-3") == Rational(1, 1000));
  CHECK(parse_rational("2.5E2") == Rational(250));
  CHECK(parse_rational("7") == Rational(7));
  CHECK_THROWS_AS(parse_rational(""), InvalidArgumentError);
  CHECK_THROWS_AS(parse_rational("abc"), InvalidArgumentError);
  CHECK_THROWS_AS(parse_rational("1/0"), InvalidArgumentError);
}
