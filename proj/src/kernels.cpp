#include "peersel/kernels.hpp"

#include <bit>

#include "peersel/errors.hpp"

namespace peersel::kernels {

BitMatrix BitMatrix::pack(const std::uint8_t* cells, std::size_t rows, std::size_t cols) {
    BitMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.words_per_col = (rows + 63) / 64;
    m.words.assign(m.words_per_col * cols, 0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            if (cells[r * cols + c]) m.set(r, c);
    return m;
}

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

bool avx2_supported() {
#if defined(PEERSEL_HAVE_AVX2)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

namespace {
std::optional<Isa> g_forced;
}

Isa active_isa() {
    if (g_forced) return *g_forced;
    return avx2_supported() ? Isa::avx2 : Isa::scalar;
}

void force_isa(std::optional<Isa> isa) {
    if (isa == Isa::avx2 && !avx2_supported())
        throw_parameter("avx2 kernels requested but not available on this CPU/build");
    g_forced = isa;
}

std::int64_t popcnt_and_range_scalar(const std::uint64_t* a, const std::uint64_t* b,
                                     std::size_t nwords) {
    std::int64_t total = 0;
    for (std::size_t w = 0; w < nwords; ++w) total += std::popcount(a[w] & b[w]);
    return total;
}

#if !defined(PEERSEL_HAVE_AVX2)
std::int64_t popcnt_and_range_avx2(const std::uint64_t*, const std::uint64_t*, std::size_t) {
    throw_parameter("avx2 kernels not compiled into this build");
}
#endif

std::int64_t pair_count(const BitMatrix& bits, std::size_t col_a, std::size_t col_b,
                        std::size_t row_begin, std::size_t row_end) {
    if (row_end > bits.rows || row_begin > row_end)
        throw_parameter("pair_count: row range outside packed matrix");
    if (row_begin == row_end) return 0;

    const std::uint64_t* a = bits.col(col_a);
    const std::uint64_t* b = bits.col(col_b);
    const std::size_t wb = row_begin / 64;
    const std::size_t we = (row_end + 63) / 64;
    const std::uint64_t head = ~std::uint64_t{0} << (row_begin % 64);
    const std::uint64_t tail =
        (row_end % 64) ? (~std::uint64_t{0} >> (64 - row_end % 64)) : ~std::uint64_t{0};

    if (we == wb + 1) return std::popcount(a[wb] & b[wb] & head & tail);

    std::int64_t total = std::popcount(a[wb] & b[wb] & head);
    total += std::popcount(a[we - 1] & b[we - 1] & tail);
    const std::size_t interior = we - 1 - (wb + 1);
    if (interior > 0) {
        auto fn = active_isa() == Isa::avx2 ? popcnt_and_range_avx2 : popcnt_and_range_scalar;
        total += fn(a + wb + 1, b + wb + 1, interior);
    }
    return total;
}

void cooccur_counts(const BitMatrix& bits, std::size_t row_begin, std::size_t row_end,
                    std::int64_t* counts) {
    const std::size_t k = bits.cols;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i; j < k; ++j) {
            const std::int64_t c = pair_count(bits, i, j, row_begin, row_end);
            counts[i * k + j] = c;
            counts[j * k + i] = c;
        }
}

}  // namespace peersel::kernels
