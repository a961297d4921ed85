#pragma once

// Shared helpers for the unit and acceptance suites: deterministic name
// generation, hand-built and randomly sampled co-occurrence matrices,
// synthetic panels, and a self-cleaning temp directory.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "peersel/attach.hpp"
#include "peersel/cooccur.hpp"
#include "peersel/errors.hpp"
#include "peersel/panel.hpp"
#include "peersel/rng.hpp"
#include "peersel/sigtree.hpp"
#include "peersel/verify.hpp"

namespace testsup {

inline std::vector<std::string> signal_names(std::size_t n) {
    std::vector<std::string> out;
    char buf[32];
    for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof(buf), "_S%02zu", i);
        out.emplace_back(buf);
    }
    return out;
}

inline std::vector<std::string> asset_names(std::size_t m) {
    std::vector<std::string> out;
    char buf[32];
    for (std::size_t i = 0; i < m; ++i) {
        std::snprintf(buf, sizeof(buf), "xA%02zu", i);
        out.emplace_back(buf);
    }
    return out;
}

inline std::vector<std::string> mixed_names(std::size_t n, std::size_t m) {
    auto names = signal_names(n);
    auto assets = asset_names(m);
    names.insert(names.end(), assets.begin(), assets.end());
    return names;
}

// Counts sampled from an actual random binary window, so every matrix the
// tests feed in is realizable (chi_ij <= min(chi_ii, chi_jj) etc.).
inline peersel::CoOccurrence random_counts(peersel::Rng& rng, std::size_t n_signals,
                                           std::size_t n_assets, std::int64_t window,
                                           double density = 0.45) {
    auto names = mixed_names(n_signals, n_assets);
    auto cells = peersel::verify::random_cells(rng, static_cast<std::size_t>(window),
                                               names.size(), density);
    return peersel::verify::naive_counts(cells, static_cast<std::size_t>(window), names,
                                         n_signals, n_assets);
}

// Hand-built counts: diagonal defaults to the window length, listed
// off-diagonal entries are mirrored.
inline peersel::CoOccurrence make_counts(
    std::vector<std::string> names, std::size_t n_signals, std::int64_t window,
    const std::vector<std::tuple<std::size_t, std::size_t, std::int64_t>>& entries,
    std::int64_t diagonal = -1) {
    peersel::CoOccurrence c;
    c.names = std::move(names);
    c.n_signals = n_signals;
    c.n_assets = c.names.size() - n_signals;
    c.window_len = window;
    c.counts.assign(c.names.size() * c.names.size(), 0);
    for (std::size_t i = 0; i < c.names.size(); ++i)
        c.at(i, i) = diagonal < 0 ? window : diagonal;
    for (const auto& [i, j, v] : entries) {
        c.at(i, j) = v;
        c.at(j, i) = v;
    }
    return c;
}

inline peersel::BinaryPanel make_panel(
    std::size_t rows, std::size_t n, std::size_t m,
    const std::function<std::uint8_t(std::size_t, std::size_t)>& cell) {
    peersel::BinaryPanel p;
    p.names = mixed_names(n, m);
    p.n_signals = n;
    p.n_assets = m;
    p.stamps.resize(rows);
    for (std::size_t r = 0; r < rows; ++r)
        p.stamps[r] = peersel::Date{static_cast<std::int32_t>(11000 + r)};
    p.cells.resize(rows * (n + m));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < n + m; ++c) p.at(r, c) = cell(r, c);
    p.thresholds.assign(n + m, 0.0);
    p.validate();
    return p;
}

inline std::shared_ptr<const peersel::SignalTree> tree_from_panel(
    const peersel::BinaryPanel& p) {
    auto counts = peersel::cooccurrence(p, 0, p.rows(), /*signals_only=*/true);
    return std::make_shared<peersel::SignalTree>(peersel::build_mst(counts));
}

inline peersel::RawSeries make_series(std::string name, std::vector<double> values,
                                      std::int32_t start_serial = 11000) {
    peersel::RawSeries s;
    s.name = std::move(name);
    s.values = std::move(values);
    s.stamps.resize(s.values.size());
    for (std::size_t i = 0; i < s.values.size(); ++i)
        s.stamps[i] = peersel::Date{start_serial + static_cast<std::int32_t>(i)};
    return s;
}

// Runs `f`, which must throw a peersel::Error, and hands back its category.
template <typename F>
inline peersel::ErrorCategory error_category(F&& f) {
    try {
        f();
    } catch (const peersel::Error& e) {
        return e.category();
    }
    throw std::runtime_error("expected a peersel::Error, none was thrown");
}

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::atomic<unsigned> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        for (;;) {
            auto candidate = base / ("peersel_test_" + std::to_string(counter.fetch_add(1)));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path = candidate;
                return;
            }
        }
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }

    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace testsup
