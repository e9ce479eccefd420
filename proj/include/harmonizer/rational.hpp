#ifndef HARMONIZER_RATIONAL_HPP
#define HARMONIZER_RATIONAL_HPP

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace harmonizer {

// Exact rational time in quarter-note beats. All note onsets/durations in a
// lead sheet live on the 16th-note grid (multiples of 1/4 beat), but raw
// corpora may carry arbitrary positions, so we keep a full rational.
class Rational {
 public:
  constexpr Rational() : num_(0), den_(1) {}
  constexpr Rational(std::int64_t n) : num_(n), den_(1) {}
  Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) { normalize(); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  Rational operator+(const Rational& o) const { return {num_ * o.den_ + o.num_ * den_, den_ * o.den_}; }
  Rational operator-(const Rational& o) const { return {num_ * o.den_ - o.num_ * den_, den_ * o.den_}; }
  Rational operator*(const Rational& o) const { return {num_ * o.num_, den_ * o.den_}; }
  Rational operator/(const Rational& o) const {
    if (o.num_ == 0) throw std::domain_error("Rational: division by zero");
    return {num_ * o.den_, den_ * o.num_};
  }

  bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const Rational& o) const { return !(*this == o); }
  bool operator<(const Rational& o) const { return num_ * o.den_ < o.num_ * den_; }
  bool operator<=(const Rational& o) const { return num_ * o.den_ <= o.num_ * den_; }
  bool operator>(const Rational& o) const { return o < *this; }
  bool operator>=(const Rational& o) const { return o <= *this; }

  // True if this is a multiple of 1/4 beat (the 16th-note grid).
  bool on_sixteenth_grid() const { return (4 * num_) % den_ == 0; }

  // Number of 16th-note ticks; valid only when on_sixteenth_grid().
  std::int64_t sixteenths() const {
    if (!on_sixteenth_grid()) throw std::domain_error("Rational: not on 16th-note grid");
    return 4 * num_ / den_;
  }

  // Serialized as "p/q" in beats; a bare integer "p" is accepted on input.
  std::string to_string() const { return std::to_string(num_) + "/" + std::to_string(den_); }
  static Rational parse(const std::string& s);

 private:
  void normalize() {
    if (den_ == 0) throw std::domain_error("Rational: zero denominator");
    if (den_ < 0) { num_ = -num_; den_ = -den_; }
    const std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) { num_ /= g; den_ /= g; }
  }

  std::int64_t num_;
  std::int64_t den_;
};

inline Rational min(const Rational& a, const Rational& b) { return a < b ? a : b; }
inline Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }

inline Rational Rational::parse(const std::string& s) {
  const auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(std::stoll(s));
    const std::int64_t p = std::stoll(s.substr(0, slash));
    const std::int64_t q = std::stoll(s.substr(slash + 1));
    return Rational(p, q);
  } catch (const std::exception&) {
    throw std::invalid_argument("Rational: cannot parse '" + s + "'");
  }
}

}  // namespace harmonizer

#endif
