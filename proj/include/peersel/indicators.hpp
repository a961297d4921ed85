#pragma once

#include "peersel/series.hpp"

namespace peersel {

// Defaults used across the indicator constructors.
inline constexpr int kDefaultZScoreWindow = 252;   // "1Y" of trading days
inline constexpr int kDefaultCarryLag = 60;
inline constexpr int kDefaultMomentumWindow = 100;

// Rolling z-score over a trailing window (population standard deviation).
// A zero-variance window yields a z-score of 0, not an error: a flat
// indicator carries no signal and binarizes to 0.
IndicatorSeries zscore(const RawSeries& series, int window = kDefaultZScoreWindow,
                       std::string name = {});

// Negates the values; toggles the sign_inverted marker so inverting twice
// restores the original series.
IndicatorSeries invert_sign(IndicatorSeries series);

// Rate differential dom - base on a shared grid.
IndicatorSeries carry(const RawSeries& dom_rate, const RawSeries& base_rate,
                      std::string name = {});

// carry_t - carry_{t-lag}.
IndicatorSeries carry_change(const IndicatorSeries& carry_series, int lag = kDefaultCarryLag,
                             std::string name = {});

// Trailing arithmetic mean of a return series; binarizes against 0.
IndicatorSeries momentum_mean(const RawSeries& spot_returns, int window = kDefaultMomentumWindow,
                              std::string name = {});

// zscore followed by sign inversion (vol-aversion convention).
IndicatorSeries implied_vol_zscore(const RawSeries& iv, int window = kDefaultZScoreWindow,
                                   std::string name = {});

// Forward arithmetic return: value at row t is p_{t+1}/p_t - 1, so a panel
// row pairs same-row signals with the outcome realized one step later.
IndicatorSeries forward_return(const RawSeries& prices, std::string name = {});

// Realized (backward) return p_t/p_{t-1} - 1; the usual input to momentum.
IndicatorSeries realized_return(const RawSeries& prices, std::string name = {});

// Pass-through for pre-counted discrete series (e.g. news keyword counts).
IndicatorSeries raw_count(const RawSeries& counts, std::string name = {});

}  // namespace peersel
