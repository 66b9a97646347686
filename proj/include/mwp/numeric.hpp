#pragma once

#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mwp/decimal.hpp"

namespace mwp {

struct NumberMatch {
    Decimal value;
    size_t begin = 0;  // byte offset of first char (currency sign included)
    size_t end = 0;    // one past last byte
};

namespace detail {

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_word_char(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

// Matches "$", the euro sign or the pound sign at position i; returns the
// byte length of the symbol, 0 if none.
inline size_t currency_len(std::string_view s, size_t i) {
    if (s[i] == '$') return 1;
    if (i + 2 < s.size() && s.compare(i, 3, "\xE2\x82\xAC") == 0) return 3;  // €
    if (i + 1 < s.size() && s.compare(i, 2, "\xC2\xA3") == 0) return 2;      // £
    return 0;
}

// A '-' acts as a sign (rather than a subtraction operator or hyphen) when
// the previous non-space character is not something a number could follow
// arithmetically: a digit, ')' or '%'.
inline bool minus_is_sign(std::string_view s, size_t i) {
    size_t j = i;
    while (j > 0) {
        char p = s[j - 1];
        if (p == ' ' || p == '\t' || p == '\n' || p == '\r') { --j; continue; }
        return !(is_digit(p) || p == ')' || p == '%');
    }
    return true;  // start of text
}

}  // namespace detail

// Scans text for numeric quantities: optional currency symbol ($ € £),
// optional negative sign, digits with optional comma groups, optional
// decimal part, optional trailing '%'. Commas and currency are stripped
// from the stored value; percents are recorded as the bare number.
inline std::vector<NumberMatch> scan_numbers(std::string_view text) {
    std::vector<NumberMatch> out;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        size_t start = i;
        size_t j = i;
        bool neg = false;
        size_t cur = detail::currency_len(text, j);
        if (cur > 0) j += cur;
        if (j < n && text[j] == '-' && j + 1 < n && detail::is_digit(text[j + 1]) &&
            detail::minus_is_sign(text, start)) {
            neg = true;
            ++j;
        }
        if (j >= n || !detail::is_digit(text[j])) { ++i; continue; }
        // reject digits glued to an identifier: "abc123"
        if (start > 0 && detail::is_word_char(text[start - 1])) {
            while (j < n && detail::is_digit(text[j])) ++j;
            i = j;
            continue;
        }
        std::string digits;
        while (j < n && detail::is_digit(text[j])) digits += text[j++];
        // comma thousand groups: ",ddd" not followed by a fourth digit
        while (j + 3 < n && text[j] == ',' && detail::is_digit(text[j + 1]) &&
               detail::is_digit(text[j + 2]) && detail::is_digit(text[j + 3]) &&
               !(j + 4 < n && detail::is_digit(text[j + 4]))) {
            digits += text[j + 1];
            digits += text[j + 2];
            digits += text[j + 3];
            j += 4;
        }
        int scale = 0;
        if (j + 1 < n && text[j] == '.' && detail::is_digit(text[j + 1])) {
            ++j;
            while (j < n && detail::is_digit(text[j])) {
                digits += text[j++];
                ++scale;
            }
        }
        if (j < n && text[j] == '%') ++j;
        auto parsed = Decimal::parse(digits);  // digit string only: yields the mantissa
        if (parsed) {
            Decimal v(neg ? -parsed->mantissa() : parsed->mantissa(), scale);
            out.push_back({v, start, j});
        }
        i = j;
    }
    return out;
}

inline std::vector<Decimal> number_values(std::string_view text) {
    std::vector<Decimal> vals;
    for (const auto& m : scan_numbers(text)) vals.push_back(m.value);
    return vals;
}

inline std::set<Decimal> distinct_values(std::string_view text) {
    std::set<Decimal> vals;
    for (const auto& m : scan_numbers(text)) vals.insert(m.value);
    return vals;
}

enum class Op { Plus, Minus, Times, Divide, Paren };

// Operator counts over an equation left-hand side. '(' is counted as an
// operator; ')' is not. A '-' that acts as a sign is not an operator.
struct OpCounts {
    int plus = 0, minus = 0, times = 0, divide = 0, paren = 0;

    // Parentheses are tracked as their own count feature but are not
    // arithmetic operations: totals, type counts, and multiplicities cover
    // only + - * /.
    int total() const { return plus + minus + times + divide; }
    int distinct_types() const {
        return (plus > 0) + (minus > 0) + (times > 0) + (divide > 0);
    }
    int max_single() const {
        int m = plus;
        if (minus > m) m = minus;
        if (times > m) m = times;
        if (divide > m) m = divide;
        return m;
    }
    OpCounts& operator+=(const OpCounts& o) {
        plus += o.plus;
        minus += o.minus;
        times += o.times;
        divide += o.divide;
        paren += o.paren;
        return *this;
    }
};

inline OpCounts scan_operators(std::string_view text) {
    OpCounts c;
    for (size_t i = 0; i < text.size(); ++i) {
        char ch = text[i];
        if (ch == '+') ++c.plus;
        else if (ch == '*') ++c.times;
        else if (ch == '/') ++c.divide;
        else if (ch == '(') ++c.paren;
        else if (ch == '-' && !detail::minus_is_sign(text, i)) ++c.minus;
        else if (i + 1 < text.size() && text.compare(i, 2, "\xC3\x97") == 0) { ++c.times; ++i; }  // ×
        else if (i + 1 < text.size() && text.compare(i, 2, "\xC3\xB7") == 0) { ++c.divide; ++i; } // ÷
    }
    return c;
}

}  // namespace mwp
