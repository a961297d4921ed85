#include "peersel/date.hpp"

#include <cstdio>

#include "peersel/errors.hpp"

namespace peersel {

namespace {

// Civil-from-days / days-from-civil, valid over the whole int32 range.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

Date parse_date(std::string_view iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
        throw_data("bad date '" + std::string(iso) + "': expected YYYY-MM-DD");
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!is_digit(iso[i]))
            throw_data("bad date '" + std::string(iso) + "': expected YYYY-MM-DD");
    int y = (iso[0] - '0') * 1000 + (iso[1] - '0') * 100 + (iso[2] - '0') * 10 + (iso[3] - '0');
    unsigned m = static_cast<unsigned>((iso[5] - '0') * 10 + (iso[6] - '0'));
    unsigned d = static_cast<unsigned>((iso[8] - '0') * 10 + (iso[9] - '0'));
    if (m < 1 || m > 12 || d < 1 || d > 31)
        throw_data("bad date '" + std::string(iso) + "': month/day out of range");
    Date out{static_cast<std::int32_t>(days_from_civil(y, m, d))};
    // round-trip check catches e.g. Feb 30
    if (to_iso(out) != iso)
        throw_data("bad date '" + std::string(iso) + "': not a calendar day");
    return out;
}

std::string to_iso(Date d) {
    int y;
    unsigned m, dd;
    civil_from_days(d.serial, y, m, dd);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, dd);
    return buf;
}

}  // namespace peersel
