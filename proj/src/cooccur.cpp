#include "peersel/cooccur.hpp"

#include <sstream>

#include <json.hpp>

#include "peersel/errors.hpp"

namespace peersel {

CoOccurrence cooccurrence(const kernels::BitMatrix& bits, const std::vector<std::string>& names,
                          std::size_t n_signals, std::size_t n_assets, std::size_t row_begin,
                          std::size_t row_end) {
    if (row_begin >= row_end)
        throw_parameter("cooccurrence: empty window");
    if (row_end > bits.rows)
        throw_parameter("cooccurrence: window outside panel rows");
    if (names.size() != bits.cols || n_signals + n_assets != bits.cols)
        throw_parameter("cooccurrence: column bookkeeping mismatch");

    CoOccurrence c;
    c.names = names;
    c.n_signals = n_signals;
    c.n_assets = n_assets;
    c.window_len = static_cast<std::int64_t>(row_end - row_begin);
    c.counts.assign(bits.cols * bits.cols, 0);
    kernels::cooccur_counts(bits, row_begin, row_end, c.counts.data());
    return c;
}

CoOccurrence cooccurrence(const BinaryPanel& panel, std::size_t row_begin, std::size_t row_end,
                          bool signals_only) {
    const std::size_t cols = signals_only ? panel.n_signals : panel.cols();
    if (row_begin >= row_end)
        throw_parameter("cooccurrence: empty window");
    if (row_end > panel.rows())
        throw_parameter("cooccurrence: window outside panel rows");

    // Repack just the columns we need; panel rows are row-major.
    kernels::BitMatrix bits;
    bits.rows = panel.rows();
    bits.cols = cols;
    bits.words_per_col = (bits.rows + 63) / 64;
    bits.words.assign(bits.words_per_col * cols, 0);
    for (std::size_t r = 0; r < panel.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c)
            if (panel.at(r, c)) bits.set(r, c);

    std::vector<std::string> names(panel.names.begin(), panel.names.begin() + cols);
    return cooccurrence(bits, names, panel.n_signals, signals_only ? 0 : panel.n_assets,
                        row_begin, row_end);
}

CoOccurrence apply_block_rules(CoOccurrence c) {
    const std::size_t n = c.n_signals;
    const std::size_t k = c.k();
    for (std::size_t i = n; i < k; ++i)       // asset-asset block
        for (std::size_t j = n; j < k; ++j) c.at(i, j) = 0;
    for (std::size_t i = 0; i < n; ++i)       // signal rows never point at future returns
        for (std::size_t j = n; j < k; ++j) c.at(i, j) = 0;
    c.blocks_zeroed = true;
    return c;
}

double dissimilarity_weight(std::int64_t chi, std::int64_t window_len) {
    if (window_len <= 0)
        throw_parameter("dissimilarity_weight: window_len must be positive");
    if (chi < 0 || chi > window_len)
        throw_parameter("dissimilarity_weight: chi must lie in [0, window_len]");
    const double f = static_cast<double>(chi) / static_cast<double>(window_len);
    return 1.0 - f * f;
}

DissimilarityWeights to_dissimilarity(const CoOccurrence& c) {
    if (c.window_len <= 0)
        throw_parameter("to_dissimilarity: window_len must be positive");
    DissimilarityWeights d;
    d.k = c.k();
    d.window_len = c.window_len;
    d.w.resize(d.k * d.k);
    for (std::size_t i = 0; i < d.k; ++i)
        for (std::size_t j = 0; j < d.k; ++j)
            d.w[i * d.k + j] = dissimilarity_weight(c.at(i, j), c.window_len);
    return d;
}

std::string cooccurrence_to_csv(const CoOccurrence& c) {
    std::ostringstream out;
    out << "name";
    for (const auto& n : c.names) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < c.k(); ++i) {
        out << c.names[i];
        for (std::size_t j = 0; j < c.k(); ++j) out << ',' << c.at(i, j);
        out << '\n';
    }
    return out.str();
}

std::string cooccurrence_to_json(const CoOccurrence& c) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["names"] = c.names;
    j["n"] = c.n_signals;
    j["m"] = c.n_assets;
    j["window_len"] = c.window_len;
    j["blocks_zeroed"] = c.blocks_zeroed;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < c.k(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t jx = 0; jx < c.k(); ++jx) row.push_back(c.at(i, jx));
        rows.push_back(std::move(row));
    }
    j["counts"] = std::move(rows);
    return j.dump(2) + "\n";
}

}  // namespace peersel
