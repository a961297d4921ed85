#include "peersel/series.hpp"

#include <cmath>

#include "peersel/errors.hpp"

namespace peersel {

void RawSeries::validate() const {
    if (values.empty())
        throw_data("series '" + name + "' is empty");
    if (stamps.size() != values.size())
        throw_data("series '" + name + "' has mismatched stamp/value lengths");
    for (std::size_t i = 1; i < stamps.size(); ++i)
        if (!(stamps[i - 1] < stamps[i]))
            throw_data("series '" + name + "' timestamps not strictly increasing at index " +
                       std::to_string(i));
    for (double v : values)
        if (!std::isfinite(v))
            throw_data("series '" + name + "' contains a non-finite value");
}

const char* to_string(IndicatorKind k) {
    switch (k) {
        case IndicatorKind::zscore: return "zscore";
        case IndicatorKind::carry: return "carry";
        case IndicatorKind::carry_change: return "carry-change";
        case IndicatorKind::momentum_mean: return "momentum-mean";
        case IndicatorKind::implied_vol_zscore: return "implied-vol-zscore";
        case IndicatorKind::ret: return "return";
        case IndicatorKind::raw_count: return "raw-count";
    }
    return "unknown";
}

IndicatorKind indicator_kind_from_string(const std::string& s) {
    if (s == "zscore") return IndicatorKind::zscore;
    if (s == "carry") return IndicatorKind::carry;
    if (s == "carry-change") return IndicatorKind::carry_change;
    if (s == "momentum-mean") return IndicatorKind::momentum_mean;
    if (s == "implied-vol-zscore") return IndicatorKind::implied_vol_zscore;
    if (s == "return") return IndicatorKind::ret;
    if (s == "raw-count") return IndicatorKind::raw_count;
    throw_config("unknown indicator kind '" + s + "'");
}

}  // namespace peersel
