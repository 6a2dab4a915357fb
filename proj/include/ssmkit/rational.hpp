#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

namespace ssmkit {

/// Exact rational p/q with q > 0, stored in lowest terms.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) { normalize(); }
  explicit Rational(std::int64_t num) : num_(num), den_(1) {}

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const Rational& o) const { return !(*this == o); }

  Rational operator/(const Rational& o) const { return Rational(num_ * o.den_, den_ * o.num_); }
  Rational operator*(const Rational& o) const { return Rational(num_ * o.num_, den_ * o.den_); }

  /// True if *this divides o with integer quotient (o / *this is an integer).
  bool divides(const Rational& o) const {
    if (num_ == 0) return o.num_ == 0;
    Rational q = o / *this;
    return q.den_ == 1;
  }

  std::string str() const {
    return den_ == 1 ? std::to_string(num_)
                     : std::to_string(num_) + "/" + std::to_string(den_);
  }

  /// gcd of two rationals: gcd(a/b, c/d) = gcd(a, c) / lcm(b, d).
  static Rational gcd(const Rational& a, const Rational& b) {
    if (a.num_ == 0) return b;
    if (b.num_ == 0) return a;
    std::int64_t g = std::gcd(std::abs(a.num_), std::abs(b.num_));
    std::int64_t l = std::lcm(a.den_, b.den_);
    return Rational(g, l);
  }

  /// Best rational approximation of x with the smallest admissible denominator
  /// <= cap such that |x - p/q| <= tol. Returns nullopt if none qualifies.
  static std::optional<Rational> approximate(double x, double tol, int cap) {
    for (std::int64_t q = 1; q <= cap; ++q) {
      std::int64_t p = std::llround(x * static_cast<double>(q));
      double err = std::abs(x - static_cast<double>(p) / static_cast<double>(q));
      if (err <= tol) return Rational(p, q);
    }
    return std::nullopt;
  }

 private:
  void normalize() {
    if (den_ == 0) throw std::invalid_argument("Rational: zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    std::int64_t g = std::gcd(std::abs(num_), den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
    if (num_ == 0) den_ = 1;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace ssmkit
