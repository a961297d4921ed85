#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace peersel::kernels {

// Column-major bit-packed {0,1} matrix. Each column is a run of 64-bit
// words, LSB-first, so windowed co-occurrence counts reduce to masked
// AND + popcount sweeps.
struct BitMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t words_per_col = 0;
    std::vector<std::uint64_t> words;

    static BitMatrix pack(const std::uint8_t* cells, std::size_t rows, std::size_t cols);

    const std::uint64_t* col(std::size_t c) const { return words.data() + c * words_per_col; }
    std::uint64_t* col(std::size_t c) { return words.data() + c * words_per_col; }

    void set(std::size_t row, std::size_t col_index) {
        words[col_index * words_per_col + row / 64] |= std::uint64_t{1} << (row % 64);
    }
    bool get(std::size_t row, std::size_t col_index) const {
        return (words[col_index * words_per_col + row / 64] >> (row % 64)) & 1u;
    }
};

enum class Isa { scalar, avx2 };

const char* isa_name(Isa isa);
bool avx2_supported();

// The variant actually in use: AVX2 when the CPU has it, unless overridden.
Isa active_isa();
void force_isa(std::optional<Isa> isa);  // nullopt restores auto-detection

// Fills the k x k row-major `counts` with pairwise co-occurrence counts of
// the packed columns over rows [row_begin, row_end). Symmetric by
// construction; the diagonal holds per-column 1-counts.
void cooccur_counts(const BitMatrix& bits, std::size_t row_begin, std::size_t row_end,
                    std::int64_t* counts);

// ISA-specific popcount-of-AND over a word range; exposed so the variants
// can be equivalence-tested against each other directly.
std::int64_t popcnt_and_range_scalar(const std::uint64_t* a, const std::uint64_t* b,
                                     std::size_t nwords);
std::int64_t popcnt_and_range_avx2(const std::uint64_t* a, const std::uint64_t* b,
                                   std::size_t nwords);

// Masked pairwise count over [row_begin, row_end) through the active ISA.
std::int64_t pair_count(const BitMatrix& bits, std::size_t col_a, std::size_t col_b,
                        std::size_t row_begin, std::size_t row_end);

}  // namespace peersel::kernels
