#ifndef NLSYM_NUMBER_HPP
#define NLSYM_NUMBER_HPP

#include <complex>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>

namespace nlsym {

using cplx = std::complex<double>;

// Bounded exact rational over int64. Arithmetic goes through __int128 and
// reports overflow instead of wrapping, so callers can demote to double.
struct Rational {
  long long num = 0;
  long long den = 1;  // always > 0, gcd(num,den) == 1

  Rational() = default;
  Rational(long long n) : num(n), den(1) {}
  Rational(long long n, long long d);

  static std::optional<Rational> make(__int128 n, __int128 d);

  bool is_zero() const { return num == 0; }
  bool is_integer() const { return den == 1; }
  double to_double() const { return double(num) / double(den); }
  std::string str() const;

  static std::optional<Rational> add(const Rational& a, const Rational& b);
  static std::optional<Rational> sub(const Rational& a, const Rational& b);
  static std::optional<Rational> mul(const Rational& a, const Rational& b);
  static std::optional<Rational> div(const Rational& a, const Rational& b);
  static std::optional<Rational> pow_int(const Rational& a, long long k);
  // Exact square root if numerator and denominator are perfect squares.
  static std::optional<Rational> sqrt_exact(const Rational& a);

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return (__int128)a.num * b.den < (__int128)b.num * a.den;
  }
};

// A complex constant: exact Gaussian rational when possible, IEEE complex
// otherwise. Exactness is contagious downward only; any inexact operand
// demotes the result.
class Number {
 public:
  Number() : exact_(true), re_{0}, im_{0}, val_(0.0, 0.0) {}
  Number(long long n) : exact_(true), re_{n}, im_{0}, val_(double(n), 0.0) {}
  Number(int n) : Number((long long)n) {}
  Number(const Rational& re, const Rational& im = Rational(0))
      : exact_(true), re_(re), im_(im), val_(re.to_double(), im.to_double()) {}
  explicit Number(double d) : exact_(false), val_(d, 0.0) {}
  explicit Number(cplx z) : exact_(false), val_(z) {}

  static Number i() { return Number(Rational(0), Rational(1)); }

  bool exact() const { return exact_; }
  const Rational& re_q() const { return re_; }
  const Rational& im_q() const { return im_; }
  cplx value() const { return val_; }

  bool is_zero() const {
    return exact_ ? (re_.is_zero() && im_.is_zero()) : (val_ == cplx(0.0, 0.0));
  }
  bool is_one() const {
    return exact_ && re_ == Rational(1) && im_.is_zero();
  }
  bool is_minus_one() const {
    return exact_ && re_ == Rational(-1) && im_.is_zero();
  }
  bool is_real() const { return exact_ ? im_.is_zero() : val_.imag() == 0.0; }
  bool is_integer(long long* out = nullptr) const {
    if (!exact_ || !im_.is_zero() || !re_.is_integer()) return false;
    if (out) *out = re_.num;
    return true;
  }
  // Exact positive rational (used by branch-safe power rules).
  bool is_positive_rational() const {
    return exact_ && im_.is_zero() && re_.num > 0;
  }

  Number operator-() const;
  Number conj() const;
  friend Number operator+(const Number& a, const Number& b);
  friend Number operator-(const Number& a, const Number& b);
  friend Number operator*(const Number& a, const Number& b);
  friend Number operator/(const Number& a, const Number& b);
  // a^k for integer k; exact when a is.
  static Number pow_int(const Number& a, long long k);
  // General power; returns nothing when no exact/meaningful closed form
  // applies (caller keeps the symbolic node).
  static std::optional<Number> pow(const Number& a, const Number& b);

  friend bool operator==(const Number& a, const Number& b);
  bool less(const Number& b) const;  // total order for canonical sorting

  size_t hash() const;
  std::string str() const;  // grammar-compatible text

 private:
  bool exact_;
  Rational re_, im_;
  cplx val_;
};

}  // namespace nlsym

#endif
