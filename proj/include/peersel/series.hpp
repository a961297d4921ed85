#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "peersel/date.hpp"

namespace peersel {

// A raw input column: price levels, rates or counts on a trading-day grid.
struct RawSeries {
    std::string name;
    std::vector<Date> stamps;   // strictly increasing
    std::vector<double> values; // finite

    void validate() const;  // throws data error on a broken invariant
};

enum class IndicatorKind {
    zscore,
    carry,
    carry_change,
    momentum_mean,
    implied_vol_zscore,
    ret,        // forward return, pairs row t with the move over (t, t+1]
    raw_count,
};

const char* to_string(IndicatorKind k);
IndicatorKind indicator_kind_from_string(const std::string& s);

// A derived column on the same grid as its source. Entries outside
// [first_valid, end_valid) are warm-up / tail slots holding NaN.
// Signal names carry the prefix "_", asset names the prefix "x".
struct IndicatorSeries {
    std::string name;
    IndicatorKind kind = IndicatorKind::raw_count;
    std::vector<Date> stamps;
    std::vector<double> values;
    std::size_t first_valid = 0;
    std::size_t end_valid = 0;
    bool sign_inverted = false;

    std::size_t size() const { return stamps.size(); }
    bool is_valid_at(std::size_t i) const { return i >= first_valid && i < end_valid; }
    bool is_signal() const { return !name.empty() && name[0] == '_'; }
    bool is_asset() const { return !name.empty() && name[0] == 'x'; }
};

}  // namespace peersel
