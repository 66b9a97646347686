#pragma once

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mwp {

// Exact decimal number: value = mantissa / 10^scale.
// Kept normalized (no trailing zeros in the fractional part) so that
// 4.50 and 4.5 compare equal and can be used as map/set keys.
class Decimal {
public:
    Decimal() = default;
    Decimal(long long mantissa, int scale) : mant_(mantissa), scale_(scale) { normalize(); }

    static std::optional<Decimal> parse(std::string_view s) {
        // Accepts optional '-', digits with optional ',' thousand groups,
        // optional fractional part. Leading currency symbols must already
        // be stripped by the caller.
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
        if (s.empty()) return std::nullopt;
        bool neg = false;
        size_t i = 0;
        if (s[i] == '-') { neg = true; ++i; }
        else if (s[i] == '+') ++i;
        long long mant = 0;
        int scale = 0;
        bool any_digit = false;
        bool in_frac = false;
        for (; i < s.size(); ++i) {
            char c = s[i];
            if (c >= '0' && c <= '9') {
                if (mant > (INT64_MAX - 9) / 10) return std::nullopt;  // overflow
                mant = mant * 10 + (c - '0');
                if (in_frac) ++scale;
                any_digit = true;
            } else if (c == ',' && !in_frac) {
                // thousand separator: needs at least 3 digits after it
                size_t digits = 0;
                while (i + 1 + digits < s.size() && s[i + 1 + digits] >= '0' && s[i + 1 + digits] <= '9') ++digits;
                if (digits < 3) return std::nullopt;
            } else if (c == '.' && !in_frac) {
                in_frac = true;
            } else {
                return std::nullopt;
            }
        }
        if (!any_digit) return std::nullopt;
        return Decimal(neg ? -mant : mant, scale);
    }

    long long mantissa() const { return mant_; }
    int scale() const { return scale_; }

    double to_double() const {
        double v = static_cast<double>(mant_);
        for (int i = 0; i < scale_; ++i) v /= 10.0;
        return v;
    }

    std::string to_string() const {
        if (scale_ == 0) return std::to_string(mant_);
        long long a = mant_ < 0 ? -mant_ : mant_;
        std::string digits = std::to_string(a);
        if (static_cast<int>(digits.size()) <= scale_)
            digits.insert(0, scale_ + 1 - digits.size(), '0');
        digits.insert(digits.size() - scale_, 1, '.');
        if (mant_ < 0) digits.insert(0, 1, '-');
        return digits;
    }

    friend bool operator==(const Decimal& a, const Decimal& b) {
        return a.mant_ == b.mant_ && a.scale_ == b.scale_;
    }
    friend bool operator!=(const Decimal& a, const Decimal& b) { return !(a == b); }
    friend bool operator<(const Decimal& a, const Decimal& b) { return cmp(a, b) < 0; }

    friend Decimal operator-(const Decimal& a, const Decimal& b) {
        auto [am, bm, s] = align(a, b);
        return Decimal(static_cast<long long>(am - bm), s);
    }

    Decimal abs() const { return Decimal(mant_ < 0 ? -mant_ : mant_, scale_); }

private:
    long long mant_ = 0;
    int scale_ = 0;

    void normalize() {
        if (mant_ == 0) { scale_ = 0; return; }
        while (scale_ > 0 && mant_ % 10 == 0) { mant_ /= 10; --scale_; }
        if (scale_ < 0) {
            while (scale_ < 0) { mant_ *= 10; ++scale_; }
        }
    }

    struct Aligned { __int128 a; __int128 b; int scale; };
    static Aligned align(const Decimal& x, const Decimal& y) {
        __int128 am = x.mant_, bm = y.mant_;
        int s = x.scale_;
        if (x.scale_ < y.scale_) {
            s = y.scale_;
            for (int i = x.scale_; i < y.scale_; ++i) am *= 10;
        } else {
            for (int i = y.scale_; i < x.scale_; ++i) bm *= 10;
        }
        return {am, bm, s};
    }
    static int cmp(const Decimal& x, const Decimal& y) {
        auto [am, bm, s] = align(x, y);
        return am < bm ? -1 : (am > bm ? 1 : 0);
    }
    Decimal(long long m, int s, bool) : mant_(m), scale_(s) {}
};

// |a - b| <= 1e-4, computed in exact decimal arithmetic.
inline bool answers_match(const Decimal& predicted, const Decimal& gold) {
    Decimal diff = (predicted - gold).abs();
    return !(Decimal(1, 4) < diff);
}

}  // namespace mwp
