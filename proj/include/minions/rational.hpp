#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace minions {

/// Exact non-floating score value.
///
/// Exam points and medal cutoffs are decimals with one or two fractional
/// digits; storing them as reduced fractions keeps threshold comparisons
/// such as 16.5 >= 16.5 exact.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1);

    /// Accepts "16.5", "-3", "33/2", "1e-2" style text. Throws
    /// std::invalid_argument on anything else.
    static Rational parse(std::string_view text);

    /// Converts through the shortest round-trip decimal representation, so
    /// a JSON number written as 16.5 becomes exactly 33/2.
    static Rational from_double(double value);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    /// True when the value has a finite decimal expansion.
    bool is_terminating_decimal() const;

    /// Decimal text for terminating values ("16.5"), "p/q" otherwise.
    std::string to_string() const;

    Rational operator-() const { return Rational(-num_, den_); }
    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }

    friend bool operator==(const Rational& a, const Rational& b) = default;
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

Rational clamp(const Rational& v, const Rational& lo, const Rational& hi);

} // namespace minions
