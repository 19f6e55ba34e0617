#include "nlsym/number.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>

namespace nlsym {

namespace {
constexpr long long kMaxInt = 2000000000000000000LL;  // headroom below 2^63

std::optional<long long> narrow(__int128 v) {
  if (v > kMaxInt || v < -kMaxInt) return std::nullopt;
  return (long long)v;
}

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}
}  // namespace

Rational::Rational(long long n, long long d) {
  auto r = make(n, d);
  if (!r) throw std::overflow_error("rational overflow");
  *this = *r;
}

std::optional<Rational> Rational::make(__int128 n, __int128 d) {
  if (d == 0) return std::nullopt;
  if (d < 0) {
    n = -n;
    d = -d;
  }
  __int128 g = gcd128(n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  auto nn = narrow(n), dd = narrow(d);
  if (!nn || !dd) return std::nullopt;
  Rational r;
  r.num = *nn;
  r.den = *dd;
  return r;
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

std::optional<Rational> Rational::add(const Rational& a, const Rational& b) {
  return make((__int128)a.num * b.den + (__int128)b.num * a.den,
              (__int128)a.den * b.den);
}
std::optional<Rational> Rational::sub(const Rational& a, const Rational& b) {
  return make((__int128)a.num * b.den - (__int128)b.num * a.den,
              (__int128)a.den * b.den);
}
std::optional<Rational> Rational::mul(const Rational& a, const Rational& b) {
  return make((__int128)a.num * b.num, (__int128)a.den * b.den);
}
std::optional<Rational> Rational::div(const Rational& a, const Rational& b) {
  if (b.num == 0) return std::nullopt;
  return make((__int128)a.num * b.den, (__int128)a.den * b.num);
}

std::optional<Rational> Rational::pow_int(const Rational& a, long long k) {
  if (k == 0) return Rational(1);
  Rational base = a;
  if (k < 0) {
    auto inv = div(Rational(1), a);
    if (!inv) return std::nullopt;
    base = *inv;
    k = -k;
  }
  Rational acc(1);
  while (k) {
    if (k & 1) {
      auto m = mul(acc, base);
      if (!m) return std::nullopt;
      acc = *m;
    }
    k >>= 1;
    if (k) {
      auto s = mul(base, base);
      if (!s) return std::nullopt;
      base = *s;
    }
  }
  return acc;
}

namespace {
std::optional<long long> isqrt_exact(long long v) {
  if (v < 0) return std::nullopt;
  long long r = (long long)std::llround(std::sqrt((double)v));
  for (long long c = r - 2; c <= r + 2; ++c)
    if (c >= 0 && c * c == v) return c;
  return std::nullopt;
}
}  // namespace

std::optional<Rational> Rational::sqrt_exact(const Rational& a) {
  if (a.num < 0) return std::nullopt;
  auto n = isqrt_exact(a.num), d = isqrt_exact(a.den);
  if (!n || !d) return std::nullopt;
  return Rational(*n, *d);
}

Number Number::operator-() const {
  if (exact_) {
    Number r(*this);
    r.re_.num = -r.re_.num;
    r.im_.num = -r.im_.num;
    r.val_ = -r.val_;
    return r;
  }
  return Number(-val_);
}

Number Number::conj() const {
  if (exact_) {
    Number r(*this);
    r.im_.num = -r.im_.num;
    r.val_ = std::conj(r.val_);
    return r;
  }
  return Number(std::conj(val_));
}

Number operator+(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    auto re = Rational::add(a.re_, b.re_), im = Rational::add(a.im_, b.im_);
    if (re && im) return Number(*re, *im);
  }
  return Number(a.val_ + b.val_);
}
Number operator-(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    auto re = Rational::sub(a.re_, b.re_), im = Rational::sub(a.im_, b.im_);
    if (re && im) return Number(*re, *im);
  }
  return Number(a.val_ - b.val_);
}
Number operator*(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    auto rr = Rational::mul(a.re_, b.re_);
    auto ii = Rational::mul(a.im_, b.im_);
    auto ri = Rational::mul(a.re_, b.im_);
    auto ir = Rational::mul(a.im_, b.re_);
    if (rr && ii && ri && ir) {
      auto re = Rational::sub(*rr, *ii);
      auto im = Rational::add(*ri, *ir);
      if (re && im) return Number(*re, *im);
    }
  }
  return Number(a.val_ * b.val_);
}
Number operator/(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_ && !b.is_zero()) {
    // a / b = a * conj(b) / |b|^2
    auto b2r = Rational::mul(b.re_, b.re_);
    auto b2i = Rational::mul(b.im_, b.im_);
    if (b2r && b2i) {
      auto n2 = Rational::add(*b2r, *b2i);
      if (n2) {
        Number prod = a * b.conj();
        if (prod.exact_) {
          auto re = Rational::div(prod.re_, *n2);
          auto im = Rational::div(prod.im_, *n2);
          if (re && im) return Number(*re, *im);
        }
      }
    }
  }
  return Number(a.val_ / b.val_);
}

Number Number::pow_int(const Number& a, long long k) {
  if (k == 0) return Number(1);
  Number base = a;
  if (k < 0) {
    base = Number(1) / a;
    k = -k;
  }
  Number acc(1);
  while (k) {
    if (k & 1) acc = acc * base;
    k >>= 1;
    if (k) base = base * base;
  }
  return acc;
}

std::optional<Number> Number::pow(const Number& a, const Number& b) {
  long long k;
  if (b.is_integer(&k)) {
    if (a.is_zero() && k <= 0) return std::nullopt;
    return pow_int(a, k);
  }
  if (a.exact() && b.exact()) {
    // half-integer exponent of a nonnegative rational with exact sqrt
    if (b.im_q().is_zero() && b.re_q().den == 2 && a.im_q().is_zero() &&
        a.re_q().num >= 0) {
      auto s = Rational::sqrt_exact(a.re_q());
      if (s) {
        auto p = Rational::pow_int(*s, b.re_q().num);
        if (p) return Number(*p);
      }
    }
    return std::nullopt;  // stays symbolic
  }
  if (a.is_zero()) {
    if (b.value().real() > 0) return Number(0);
    return std::nullopt;
  }
  return Number(std::pow(a.value(), b.value()));
}

bool operator==(const Number& a, const Number& b) {
  if (a.exact_ != b.exact_) return false;
  if (a.exact_) return a.re_ == b.re_ && a.im_ == b.im_;
  return a.val_ == b.val_;
}

bool Number::less(const Number& b) const {
  if (exact_ != b.exact_) return exact_ && !b.exact_;
  if (exact_) {
    if (!(re_ == b.re_)) return re_ < b.re_;
    return im_ < b.im_;
  }
  if (val_.real() != b.val_.real()) return val_.real() < b.val_.real();
  return val_.imag() < b.val_.imag();
}

size_t Number::hash() const {
  std::hash<long long> hi;
  std::hash<double> hd;
  size_t h = exact_ ? 0x9e3779b9u : 0x85ebca6bu;
  auto mix = [&h](size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
  if (exact_) {
    mix(hi(re_.num));
    mix(hi(re_.den));
    mix(hi(im_.num));
    mix(hi(im_.den));
  } else {
    mix(hd(val_.real()));
    mix(hd(val_.imag()));
  }
  return h;
}

namespace {
std::string dbl_str(double d) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}
}  // namespace

std::string Number::str() const {
  if (exact_) {
    if (im_.is_zero()) return re_.str();
    std::string im_part =
        (im_ == Rational(1)) ? "i"
        : (im_ == Rational(-1)) ? "-i"
                                : im_.str() + "*i";
    if (re_.is_zero()) return im_part;
    if (im_.num > 0 && !(im_ == Rational(1)))
      return "(" + re_.str() + "+" + im_part + ")";
    if (im_ == Rational(1)) return "(" + re_.str() + "+i)";
    return "(" + re_.str() + im_part + ")";  // im negative carries its sign
  }
  if (val_.imag() == 0.0) {
    if (val_.real() < 0) return "(" + dbl_str(val_.real()) + ")";
    return dbl_str(val_.real());
  }
  return "(" + dbl_str(val_.real()) + "+" + dbl_str(val_.imag()) + "*i)";
}

}  // namespace nlsym
