#pragma once

#include "duma/tools/registry.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <string>

namespace duma::tools {

// Level monthly payment of a fully amortizing loan. `annual_rate` is a
// fraction (0.041 for 4.1%); compounding is monthly.
inline double monthly_payment(double principal, double annual_rate, double years) {
    const double months = 12.0 * years;
    if (annual_rate == 0.0) return principal / months;
    const double r = annual_rate / 12.0;
    // 1 - (1+r)^-n without cancellation for small r
    const double discount = -std::expm1(-months * std::log1p(r));
    return principal * r / discount;
}

inline ToolSpec make_mortgage_tool() {
    ToolSpec spec;
    spec.name = "mortgage_calc";
    spec.description = "monthly payment, total paid and total interest of an amortized mortgage";
    spec.arg_schema_doc = "{\"principal\": 2000000, \"rate\": 0.041, \"years\": 30}";
    spec.executor = [](std::string_view raw) -> std::string {
        nlohmann::json args;
        try {
            args = nlohmann::json::parse(raw);
        } catch (const nlohmann::json::exception&) {
            throw ToolError("mortgage_calc: arguments must be a JSON object like " +
                            std::string("{\"principal\": 2000000, \"rate\": 0.041, \"years\": 30}"));
        }
        auto number = [&](const char* key) {
            if (!args.is_object() || !args.contains(key) || !args.at(key).is_number()) {
                throw ToolError(std::string("mortgage_calc: missing numeric field '") + key + "'");
            }
            return args.at(key).get<double>();
        };
        const double principal = number("principal");
        const double rate = number("rate");
        const double years = number("years");
        if (!(principal > 0)) throw ToolError("mortgage_calc: principal must be positive");
        if (!(rate >= 0) || rate >= 1) {
            throw ToolError("mortgage_calc: rate must be an annual fraction in [0, 1), e.g. 0.041 for 4.1%");
        }
        if (!(years > 0) || years > 100) throw ToolError("mortgage_calc: years must be in (0, 100]");

        const double payment = monthly_payment(principal, rate, years);
        const double months = 12.0 * years;
        const double total = payment * months;
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "monthly_payment: %.2f; months: %.0f; total_paid: %.2f; total_interest: %.2f",
                      payment, months, total, total - principal);
        return buf;
    };
    return spec;
}

} // namespace duma::tools
