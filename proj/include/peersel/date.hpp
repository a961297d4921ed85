#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace peersel {

// Calendar date stored as days since 1970-01-01 (proleptic Gregorian).
// Trading-day grids are just strictly increasing sequences of these.
struct Date {
    std::int32_t serial = 0;

    auto operator<=>(const Date&) const = default;

    Date plus_days(int n) const { return Date{serial + n}; }
};

// Parses "YYYY-MM-DD". Throws a data error on anything else.
Date parse_date(std::string_view iso);

std::string to_iso(Date d);

}  // namespace peersel
