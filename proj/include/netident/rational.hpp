#pragma once

#include "netident/poly.hpp"

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace netident {

class ImproperError : public std::domain_error {
 public:
  explicit ImproperError(const std::string& what) : std::domain_error(what) {}
};

/// Rational function num/den in z, kept in canonical form: gcd(num, den) = 1
/// and den monic. The zero function is 0/1.
class Rat {
 public:
  Rat() : num_(), den_(Poly::one()) {}
  Rat(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den)) { normalize(); }
  explicit Rat(const Coeff& c) : num_(Poly::constant(c)), den_(Poly::one()) {
    if (c == 0) num_ = Poly();
  }

  static Rat zero() { return Rat(); }
  static Rat one() { return Rat(Coeff(1)); }
  static Rat constant(const Coeff& c) { return Rat(c); }
  // The shift variable z itself (improper as a transfer function).
  static Rat z() { return Rat(Poly::z(), Poly::one()); }
  // 1/z, the unit delay.
  static Rat delay() { return Rat(Poly::one(), Poly::z()); }

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }

  bool is_zero() const { return num_.is_zero(); }
  bool is_proper() const { return num_.degree() <= den_.degree(); }
  bool is_strictly_proper() const { return num_.degree() < den_.degree(); }
  bool is_constant() const { return num_.degree() <= 0 && den_.degree() == 0; }

  /// Limit for z -> infinity. Requires a proper function.
  Coeff feedthrough() const {
    if (!is_proper())
      throw ImproperError("feedthrough of improper rational function " + to_string());
    if (is_strictly_proper()) return Coeff(0);
    return num_.leading() / den_.leading();
  }

  friend bool operator==(const Rat& a, const Rat& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }

  friend Rat operator+(const Rat& a, const Rat& b) {
    return Rat(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
  }
  friend Rat operator-(const Rat& a, const Rat& b) {
    return Rat(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
  }
  Rat operator-() const {
    Rat r = *this;
    r.num_ = -r.num_;
    return r;
  }
  friend Rat operator*(const Rat& a, const Rat& b) {
    // Cross-cancel first to keep intermediate degrees down.
    Poly g1 = gcd(a.num_, b.den_);
    Poly g2 = gcd(b.num_, a.den_);
    return Rat(Poly::divide_exact(a.num_, g1) * Poly::divide_exact(b.num_, g2),
               Poly::divide_exact(a.den_, g2) * Poly::divide_exact(b.den_, g1));
  }
  friend Rat operator/(const Rat& a, const Rat& b) {
    if (b.is_zero()) throw std::domain_error("division by the zero rational function");
    return a * Rat(b.den_, b.num_);
  }
  friend Rat operator*(const Coeff& s, const Rat& a) { return Rat(s * a.num_, a.den_); }

  Rat& operator+=(const Rat& o) { return *this = *this + o; }
  Rat& operator-=(const Rat& o) { return *this = *this - o; }
  Rat& operator*=(const Rat& o) { return *this = *this * o; }

  std::complex<double> evaluate(const std::complex<double>& zval) const {
    return num_.evaluate(zval) / den_.evaluate(zval);
  }

  /// True when zval is numerically too close to a pole for safe evaluation.
  bool near_pole(const std::complex<double>& zval, double rel_tol = 1e-10) const {
    double scale = den_.coeff_scale();
    return std::abs(den_.evaluate(zval)) < rel_tol * (1.0 + scale);
  }

  std::string to_string(const std::string& var = "z") const {
    if (den_.is_one()) return num_.to_string(var);
    return "(" + num_.to_string(var) + ")/(" + den_.to_string(var) + ")";
  }

 private:
  Poly num_, den_;

  void normalize() {
    if (den_.is_zero()) throw std::domain_error("rational function with zero denominator");
    if (num_.is_zero()) {
      den_ = Poly::one();
      return;
    }
    Poly g = gcd(num_, den_);
    num_ = Poly::divide_exact(num_, g);
    den_ = Poly::divide_exact(den_, g);
    Coeff lead = den_.leading();
    if (lead != 1) {
      Coeff inv = Coeff(1) / lead;
      num_ = inv * num_;
      den_ = inv * den_;
    }
  }
};

// c/(z - a): first-order strictly proper building block.
inline Rat first_order(const Coeff& gain, const Coeff& pole) {
  return Rat(Poly::constant(gain), Poly{-pole, Coeff(1)});
}

}  // namespace netident
