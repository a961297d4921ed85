#include "peersel/indicators.hpp"

#include <cmath>
#include <limits>

#include "peersel/errors.hpp"

namespace peersel {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

IndicatorSeries make_base(const RawSeries& src, IndicatorKind kind, std::string name) {
    src.validate();
    IndicatorSeries out;
    out.name = name.empty() ? src.name : std::move(name);
    out.kind = kind;
    out.stamps = src.stamps;
    out.values.assign(src.values.size(), kNaN);
    out.first_valid = 0;
    out.end_valid = src.values.size();
    return out;
}

}  // namespace

IndicatorSeries zscore(const RawSeries& series, int window, std::string name) {
    if (window < 2)
        throw_parameter("zscore window must be >= 2, got " + std::to_string(window));
    if (series.values.size() < static_cast<std::size_t>(window))
        throw_parameter("zscore: series '" + series.name + "' shorter than window " +
                        std::to_string(window));
    IndicatorSeries out = make_base(series, IndicatorKind::zscore, std::move(name));
    const std::size_t w = static_cast<std::size_t>(window);
    const std::size_t n = series.values.size();
    for (std::size_t t = w - 1; t < n; ++t) {
        double mean = 0.0;
        for (std::size_t i = t + 1 - w; i <= t; ++i) mean += series.values[i];
        mean /= static_cast<double>(w);
        double var = 0.0;
        for (std::size_t i = t + 1 - w; i <= t; ++i) {
            const double d = series.values[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(w);  // population std
        const double sd = std::sqrt(var);
        out.values[t] = sd > 0.0 ? (series.values[t] - mean) / sd : 0.0;
    }
    out.first_valid = w - 1;
    return out;
}

IndicatorSeries invert_sign(IndicatorSeries series) {
    for (std::size_t i = series.first_valid; i < series.end_valid; ++i)
        series.values[i] = -series.values[i];
    series.sign_inverted = !series.sign_inverted;
    return series;
}

IndicatorSeries carry(const RawSeries& dom_rate, const RawSeries& base_rate, std::string name) {
    dom_rate.validate();
    base_rate.validate();
    if (dom_rate.stamps != base_rate.stamps)
        throw_data("carry: misaligned grids for '" + dom_rate.name + "' vs '" + base_rate.name + "'");
    IndicatorSeries out = make_base(dom_rate, IndicatorKind::carry, std::move(name));
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = dom_rate.values[i] - base_rate.values[i];
    return out;
}

IndicatorSeries carry_change(const IndicatorSeries& carry_series, int lag, std::string name) {
    if (lag < 1)
        throw_parameter("carry_change lag must be >= 1, got " + std::to_string(lag));
    IndicatorSeries out = carry_series;
    if (!name.empty()) out.name = std::move(name);
    out.kind = IndicatorKind::carry_change;
    const std::size_t l = static_cast<std::size_t>(lag);
    std::fill(out.values.begin(), out.values.end(), kNaN);
    out.first_valid = carry_series.first_valid + l;
    out.end_valid = carry_series.end_valid;
    if (out.first_valid > out.end_valid) out.first_valid = out.end_valid;
    for (std::size_t t = out.first_valid; t < out.end_valid; ++t)
        out.values[t] = carry_series.values[t] - carry_series.values[t - l];
    return out;
}

IndicatorSeries momentum_mean(const RawSeries& spot_returns, int window, std::string name) {
    if (window < 1)
        throw_parameter("momentum window must be >= 1, got " + std::to_string(window));
    IndicatorSeries out = make_base(spot_returns, IndicatorKind::momentum_mean, std::move(name));
    const std::size_t w = static_cast<std::size_t>(window);
    const std::size_t n = spot_returns.values.size();
    out.first_valid = n < w ? n : w - 1;
    for (std::size_t t = out.first_valid; t < n; ++t) {
        double mean = 0.0;
        for (std::size_t i = t + 1 - w; i <= t; ++i) mean += spot_returns.values[i];
        out.values[t] = mean / static_cast<double>(w);
    }
    return out;
}

IndicatorSeries implied_vol_zscore(const RawSeries& iv, int window, std::string name) {
    IndicatorSeries out = invert_sign(zscore(iv, window, std::move(name)));
    out.kind = IndicatorKind::implied_vol_zscore;
    return out;
}

IndicatorSeries forward_return(const RawSeries& prices, std::string name) {
    IndicatorSeries out = make_base(prices, IndicatorKind::ret, std::move(name));
    const std::size_t n = prices.values.size();
    if (n < 2)
        throw_data("forward_return: series '" + prices.name + "' needs at least 2 points");
    for (std::size_t t = 0; t + 1 < n; ++t) {
        if (prices.values[t] <= 0.0)
            throw_data("forward_return: non-positive level in '" + prices.name + "'");
        out.values[t] = prices.values[t + 1] / prices.values[t] - 1.0;
    }
    out.values[n - 1] = kNaN;
    out.end_valid = n - 1;
    return out;
}

IndicatorSeries realized_return(const RawSeries& prices, std::string name) {
    IndicatorSeries out = make_base(prices, IndicatorKind::ret, std::move(name));
    const std::size_t n = prices.values.size();
    if (n < 2)
        throw_data("realized_return: series '" + prices.name + "' needs at least 2 points");
    for (std::size_t t = 1; t < n; ++t) {
        if (prices.values[t - 1] <= 0.0)
            throw_data("realized_return: non-positive level in '" + prices.name + "'");
        out.values[t] = prices.values[t] / prices.values[t - 1] - 1.0;
    }
    out.values[0] = kNaN;
    out.first_valid = 1;
    return out;
}

IndicatorSeries raw_count(const RawSeries& counts, std::string name) {
    IndicatorSeries out = make_base(counts, IndicatorKind::raw_count, std::move(name));
    out.values = counts.values;
    return out;
}

}  // namespace peersel
