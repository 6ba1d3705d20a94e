#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <complex>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace netident {

// Exact rational scalar used for all polynomial coefficients.
using Coeff = boost::multiprecision::cpp_rational;

// Elimination on polynomial matrices can blow up intermediate degrees.
// Anything past this cap aborts with DegreeOverflow instead of grinding on.
inline constexpr int kDegreeCap = 64;

class DegreeOverflow : public std::runtime_error {
 public:
  explicit DegreeOverflow(int degree)
      : std::runtime_error("polynomial degree " + std::to_string(degree) +
                           " exceeds cap " + std::to_string(kDegreeCap)) {}
};

/// Univariate polynomial in the forward-shift variable z, coefficients exact
/// rationals stored ascending. Canonical form strips trailing zeros; the zero
/// polynomial has an empty coefficient list and reports degree() == -1.
class Poly {
 public:
  Poly() = default;
  Poly(std::initializer_list<Coeff> coeffs) : c_(coeffs) { strip(); }
  explicit Poly(std::vector<Coeff> coeffs) : c_(std::move(coeffs)) { strip(); }

  static Poly constant(const Coeff& v) { return Poly{v}; }
  static Poly one() { return Poly{Coeff(1)}; }
  // The monomial z.
  static Poly z() { return Poly{Coeff(0), Coeff(1)}; }

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }

  Coeff coeff(int k) const {
    if (k < 0 || k >= static_cast<int>(c_.size())) return Coeff(0);
    return c_[static_cast<size_t>(k)];
  }
  const std::vector<Coeff>& coeffs() const { return c_; }

  Coeff leading() const {
    if (is_zero()) throw std::domain_error("leading coefficient of zero polynomial");
    return c_.back();
  }

  bool is_one() const { return c_.size() == 1 && c_[0] == 1; }

  friend bool operator==(const Poly& a, const Poly& b) { return a.c_ == b.c_; }
  friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }

  friend Poly operator+(const Poly& a, const Poly& b) {
    std::vector<Coeff> r(std::max(a.c_.size(), b.c_.size()), Coeff(0));
    for (size_t i = 0; i < a.c_.size(); ++i) r[i] += a.c_[i];
    for (size_t i = 0; i < b.c_.size(); ++i) r[i] += b.c_[i];
    return Poly(std::move(r));
  }
  friend Poly operator-(const Poly& a, const Poly& b) {
    std::vector<Coeff> r(std::max(a.c_.size(), b.c_.size()), Coeff(0));
    for (size_t i = 0; i < a.c_.size(); ++i) r[i] += a.c_[i];
    for (size_t i = 0; i < b.c_.size(); ++i) r[i] -= b.c_[i];
    return Poly(std::move(r));
  }
  Poly operator-() const {
    std::vector<Coeff> r(c_);
    for (auto& v : r) v = -v;
    return Poly(std::move(r));
  }
  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return Poly();
    int deg = a.degree() + b.degree();
    if (deg > kDegreeCap) throw DegreeOverflow(deg);
    std::vector<Coeff> r(static_cast<size_t>(deg) + 1, Coeff(0));
    for (size_t i = 0; i < a.c_.size(); ++i)
      for (size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
    return Poly(std::move(r));
  }
  friend Poly operator*(const Coeff& s, const Poly& p) {
    if (s == 0) return Poly();
    std::vector<Coeff> r(p.c_);
    for (auto& v : r) v *= s;
    return Poly(std::move(r));
  }
  friend Poly operator*(const Poly& p, const Coeff& s) { return s * p; }

  /// Euclidean division over the rational field: a = q*b + r, deg r < deg b.
  static std::pair<Poly, Poly> divmod(const Poly& a, const Poly& b) {
    if (b.is_zero()) throw std::domain_error("polynomial division by zero");
    Poly rem = a;
    std::vector<Coeff> q(a.degree() >= b.degree()
                             ? static_cast<size_t>(a.degree() - b.degree()) + 1
                             : 0,
                         Coeff(0));
    const Coeff blead = b.leading();
    while (!rem.is_zero() && rem.degree() >= b.degree()) {
      int shift = rem.degree() - b.degree();
      Coeff f = rem.leading() / blead;
      q[static_cast<size_t>(shift)] = f;
      // rem -= f * z^shift * b
      std::vector<Coeff> rr(rem.c_);
      for (size_t j = 0; j < b.c_.size(); ++j)
        rr[j + static_cast<size_t>(shift)] -= f * b.c_[j];
      rr.pop_back();  // leading term cancels exactly
      rem = Poly(std::move(rr));
    }
    return {Poly(std::move(q)), rem};
  }

  /// Exact quotient; throws if the division leaves a remainder.
  static Poly divide_exact(const Poly& a, const Poly& b) {
    auto [q, r] = divmod(a, b);
    if (!r.is_zero())
      throw std::logic_error("inexact polynomial division where exactness was required");
    return q;
  }

  Poly monic() const {
    if (is_zero()) return *this;
    Coeff inv = Coeff(1) / leading();
    return inv * *this;
  }

  std::complex<double> evaluate(const std::complex<double>& zval) const {
    std::complex<double> acc(0.0, 0.0);
    for (size_t i = c_.size(); i-- > 0;)
      acc = acc * zval + std::complex<double>(c_[i].convert_to<double>(), 0.0);
    return acc;
  }

  Coeff evaluate_exact(const Coeff& zval) const {
    Coeff acc(0);
    for (size_t i = c_.size(); i-- > 0;) acc = acc * zval + c_[i];
    return acc;
  }

  // Sum of |coefficients| as double; cheap magnitude scale for pole tests.
  double coeff_scale() const {
    double s = 0.0;
    for (const auto& v : c_) s += std::abs(v.convert_to<double>());
    return s;
  }

  std::string to_string(const std::string& var = "z") const {
    if (is_zero()) return "0";
    std::string out;
    for (size_t i = c_.size(); i-- > 0;) {
      if (c_[i] == 0) continue;
      if (!out.empty()) out += " + ";
      std::string term = c_[i].str();
      if (i == 0) {
        out += term;
      } else {
        if (c_[i] == 1)
          out += var;
        else if (c_[i] == -1)
          out += "-" + var;
        else
          out += term + var;
        if (i > 1) out += "^" + std::to_string(i);
      }
    }
    return out;
  }

 private:
  std::vector<Coeff> c_;

  void strip() {
    while (!c_.empty() && c_.back() == 0) c_.pop_back();
  }
};

inline Poly gcd(Poly a, Poly b) {
  // Euclid with monic normalization of every remainder to tame coefficients.
  if (a.is_zero()) return b.monic();
  if (b.is_zero()) return a.monic();
  a = a.monic();
  b = b.monic();
  while (!b.is_zero()) {
    Poly r = Poly::divmod(a, b).second;
    a = std::move(b);
    b = r.is_zero() ? r : r.monic();
  }
  return a;
}

inline Poly lcm(const Poly& a, const Poly& b) {
  if (a.is_zero() || b.is_zero()) return Poly();
  return Poly::divide_exact(a * b, gcd(a, b)).monic();
}

}  // namespace netident
