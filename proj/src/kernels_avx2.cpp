// AVX2 variant of the AND+popcount sweep. Compiled with -mavx2 in its own
// translation unit; callers go through the runtime dispatch in kernels.cpp.

#if defined(PEERSEL_HAVE_AVX2)

#include <immintrin.h>

#include <bit>
#include <cstdint>

namespace peersel::kernels {

namespace {

// Nibble-lookup popcount: per-byte counts via pshufb, then sad against zero
// to widen into four 64-bit lane sums.
inline __m256i popcount256(__m256i v) {
    const __m256i lookup =
        _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                         0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
    const __m256i low_mask = _mm256_set1_epi8(0x0f);
    const __m256i lo = _mm256_and_si256(v, low_mask);
    const __m256i hi = _mm256_and_si256(_mm256_srli_epi32(v, 4), low_mask);
    const __m256i cnt =
        _mm256_add_epi8(_mm256_shuffle_epi8(lookup, lo), _mm256_shuffle_epi8(lookup, hi));
    return _mm256_sad_epu8(cnt, _mm256_setzero_si256());
}

}  // namespace

std::int64_t popcnt_and_range_avx2(const std::uint64_t* a, const std::uint64_t* b,
                                   std::size_t nwords) {
    __m256i acc = _mm256_setzero_si256();
    std::size_t w = 0;
    for (; w + 4 <= nwords; w += 4) {
        const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + w));
        const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + w));
        acc = _mm256_add_epi64(acc, popcount256(_mm256_and_si256(va, vb)));
    }
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
    std::int64_t total =
        static_cast<std::int64_t>(lanes[0] + lanes[1] + lanes[2] + lanes[3]);
    for (; w < nwords; ++w) total += std::popcount(a[w] & b[w]);
    return total;
}

}  // namespace peersel::kernels

#endif  // PEERSEL_HAVE_AVX2
