#pragma once

// Exact arithmetic over rationals: + - * / unary sign, parentheses and
// decimal literals. Results print as decimals rounded half away from zero to
// ten places, trailing zeros removed.

#include "duma/tools/registry.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <string>
#include <string_view>

namespace duma::tools {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

namespace detail {

class ExpressionParser {
public:
    explicit ExpressionParser(std::string_view src) : src_(src) {}

    Rational parse() {
        if (src_.size() > kMaxLength) throw ToolError("expression longer than 4096 characters");
        auto v = expr();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
        return v;
    }

private:
    static constexpr std::size_t kMaxLength = 4096;
    static constexpr int kMaxDepth = 128;
    static constexpr std::size_t kMaxDigits = 64;

    [[noreturn]] void fail(const std::string& what) const {
        throw ToolError("calculator: " + what + " at position " + std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < src_.size() && text::is_space(src_[pos_])) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Rational expr() {
        auto v = term();
        for (;;) {
            if (eat('+')) v += term();
            else if (eat('-')) v -= term();
            else return v;
        }
    }

    Rational term() {
        auto v = factor();
        for (;;) {
            if (eat('*')) {
                v *= factor();
            } else if (eat('/')) {
                auto d = factor();
                if (d == 0) throw ToolError("calculator: division by zero");
                v /= d;
            } else {
                return v;
            }
        }
    }

    Rational factor() {
        if (++depth_ > kMaxDepth) fail("expression nested too deeply");
        Rational v;
        if (eat('-')) v = -factor();
        else if (eat('+')) v = factor();
        else v = primary();
        --depth_;
        return v;
    }

    Rational primary() {
        if (eat('(')) {
            auto v = expr();
            if (!eat(')')) fail("missing ')'");
            return v;
        }
        skip_ws();
        return number();
    }

    Rational number() {
        const auto start = pos_;
        std::string digits;
        std::size_t frac_digits = 0;
        bool seen_dot = false;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c >= '0' && c <= '9') {
                digits.push_back(c);
                if (seen_dot) ++frac_digits;
            } else if (c == '.' && !seen_dot) {
                seen_dot = true;
            } else {
                break;
            }
            ++pos_;
        }
        if (digits.empty()) {
            pos_ = start;
            if (pos_ >= src_.size()) fail("unexpected end of expression");
            fail("expected a number");
        }
        // cpp_int reads a leading 0 as an octal prefix
        digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
        if (digits.size() > kMaxDigits) fail("number literal too long");
        BigInt num(digits);
        BigInt den = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(frac_digits));
        return Rational(num, den);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

} // namespace detail

inline Rational evaluate_expression(std::string_view expression) {
    return detail::ExpressionParser(expression).parse();
}

// Decimal rendering of `value` rounded half away from zero to `places`.
inline std::string format_decimal(const Rational& value, unsigned places = 10) {
    const bool negative = value < 0;
    const Rational mag = negative ? Rational(-value) : value;
    const BigInt scale = boost::multiprecision::pow(BigInt(10), places);
    const BigInt num = boost::multiprecision::numerator(mag) * scale;
    const BigInt den = boost::multiprecision::denominator(mag);
    BigInt q = num / den;
    const BigInt r = num % den;
    if (r * 2 >= den) q += 1;

    std::string digits = q.str();
    if (digits.size() <= places) digits.insert(0, places - digits.size() + 1, '0');
    std::string int_part = digits.substr(0, digits.size() - places);
    std::string frac_part = digits.substr(digits.size() - places);
    while (!frac_part.empty() && frac_part.back() == '0') frac_part.pop_back();

    std::string out;
    if (negative && (q != 0)) out.push_back('-');
    out += int_part;
    if (!frac_part.empty()) out += "." + frac_part;
    return out;
}

inline ToolSpec make_calculator_tool() {
    ToolSpec spec;
    spec.name = "calculator";
    spec.description = "evaluates an arithmetic expression with + - * / and parentheses";
    spec.arg_schema_doc = "an expression such as 3500*0.2, or {\"expression\": \"...\"}";
    spec.executor = [](std::string_view raw) -> std::string {
        std::string expr(text::trim(raw));
        if (!expr.empty() && expr.front() == '{') {
            try {
                expr = nlohmann::json::parse(expr).at("expression").get<std::string>();
            } catch (const nlohmann::json::exception&) {
                throw ToolError("calculator: expected {\"expression\": \"...\"}");
            }
        }
        if (text::trim(expr).empty()) throw ToolError("calculator: empty expression");
        return format_decimal(evaluate_expression(expr));
    };
    return spec;
}

} // namespace duma::tools
