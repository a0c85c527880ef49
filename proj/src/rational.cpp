#include "minions/rational.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <system_error>

namespace minions {

namespace {

using i128 = __int128;

std::int64_t narrow(i128 v)
{
    if (v > INT64_MAX || v < INT64_MIN) {
        throw std::overflow_error("rational overflow");
    }
    return static_cast<std::int64_t>(v);
}

Rational make(i128 num, i128 den)
{
    if (den == 0) {
        throw std::domain_error("rational with zero denominator");
    }
    if (den < 0) {
        num = -num;
        den = -den;
    }
    i128 a = num < 0 ? -num : num;
    i128 b = den;
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    if (a > 1) {
        num /= a;
        den /= a;
    }
    return Rational(narrow(num), narrow(den));
}

std::int64_t pow10(int e)
{
    if (e < 0 || e > 18) {
        throw std::overflow_error("decimal exponent out of range");
    }
    std::int64_t r = 1;
    while (e-- > 0) {
        r *= 10;
    }
    return r;
}

} // namespace

Rational::Rational(std::int64_t num, std::int64_t den)
{
    if (den == 0) {
        throw std::domain_error("rational with zero denominator");
    }
    if (den < 0) {
        num = -num;
        den = -den;
    }
    std::int64_t g = std::gcd(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    num_ = num;
    den_ = den;
}

Rational Rational::parse(std::string_view text)
{
    auto trim = [](std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return s;
    };
    text = trim(text);
    if (text.empty()) {
        throw std::invalid_argument("empty rational");
    }

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        Rational n = parse(text.substr(0, slash));
        Rational d = parse(text.substr(slash + 1));
        if (d.num_ == 0) {
            throw std::invalid_argument("rational with zero denominator: " + std::string(text));
        }
        return n / d;
    }

    bool negative = false;
    std::size_t i = 0;
    if (text[i] == '+' || text[i] == '-') {
        negative = text[i] == '-';
        ++i;
    }
    i128 mantissa = 0;
    int frac_digits = 0;
    bool any_digit = false;
    bool seen_point = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c >= '0' && c <= '9') {
            any_digit = true;
            mantissa = mantissa * 10 + (c - '0');
            if (mantissa > (i128)INT64_MAX * 1000) {
                throw std::overflow_error("decimal too long: " + std::string(text));
            }
            if (seen_point) ++frac_digits;
        } else if (c == '.' && !seen_point) {
            seen_point = true;
        } else {
            break;
        }
    }
    if (!any_digit) {
        throw std::invalid_argument("not a number: " + std::string(text));
    }
    int exponent = 0;
    if (i < text.size()) {
        if (text[i] != 'e' && text[i] != 'E') {
            throw std::invalid_argument("not a number: " + std::string(text));
        }
        ++i;
        auto rest = text.substr(i);
        if (!rest.empty() && rest.front() == '+') rest.remove_prefix(1);
        auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), exponent);
        if (ec != std::errc() || ptr != rest.data() + rest.size()) {
            throw std::invalid_argument("bad exponent: " + std::string(text));
        }
    }
    int scale = exponent - frac_digits;
    i128 num = negative ? -mantissa : mantissa;
    if (scale >= 0) {
        return make(num * pow10(scale), 1);
    }
    return make(num, pow10(-scale));
}

Rational Rational::from_double(double value)
{
    if (!std::isfinite(value)) {
        throw std::invalid_argument("non-finite score");
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) {
        throw std::invalid_argument("unformattable double");
    }
    return parse(std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
}

bool Rational::is_terminating_decimal() const
{
    std::int64_t d = den_;
    while (d % 2 == 0) d /= 2;
    while (d % 5 == 0) d /= 5;
    return d == 1;
}

std::string Rational::to_string() const
{
    if (!is_terminating_decimal()) {
        return std::to_string(num_) + "/" + std::to_string(den_);
    }
    if (den_ == 1) {
        return std::to_string(num_);
    }
    // Scale to a power of ten denominator.
    int digits = 1;
    i128 p = 10;
    while (p % den_ != 0) {
        if (digits >= 18) {
            return std::to_string(num_) + "/" + std::to_string(den_);
        }
        p *= 10;
        ++digits;
    }
    i128 num = (i128)num_ * (p / den_);
    bool negative = num < 0;
    i128 a = negative ? -num : num;
    std::string digits_str;
    do {
        digits_str.insert(digits_str.begin(), static_cast<char>('0' + static_cast<int>(a % 10)));
        a /= 10;
    } while (a != 0);
    while (static_cast<int>(digits_str.size()) <= digits) {
        digits_str.insert(digits_str.begin(), '0');
    }
    digits_str.insert(digits_str.end() - digits, '.');
    while (digits_str.back() == '0') digits_str.pop_back();
    if (digits_str.back() == '.') digits_str.pop_back();
    return (negative ? "-" : "") + digits_str;
}

Rational operator+(const Rational& a, const Rational& b)
{
    return make((i128)a.num_ * b.den_ + (i128)b.num_ * a.den_, (i128)a.den_ * b.den_);
}

Rational operator-(const Rational& a, const Rational& b)
{
    return make((i128)a.num_ * b.den_ - (i128)b.num_ * a.den_, (i128)a.den_ * b.den_);
}

Rational operator*(const Rational& a, const Rational& b)
{
    return make((i128)a.num_ * b.num_, (i128)a.den_ * b.den_);
}

Rational operator/(const Rational& a, const Rational& b)
{
    if (b.num_ == 0) {
        throw std::domain_error("division by zero rational");
    }
    return make((i128)a.num_ * b.den_, (i128)a.den_ * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b)
{
    i128 lhs = (i128)a.num_ * b.den_;
    i128 rhs = (i128)b.num_ * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

Rational clamp(const Rational& v, const Rational& lo, const Rational& hi)
{
    if (v < lo) return lo;
    if (v > hi) return hi;
    return v;
}

} // namespace minions
