#include "autocut/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#ifdef AUTOCUT_HAVE_OPENMP
#include <omp.h>
#endif

namespace autocut::kernels {

namespace {
std::atomic<bool> g_parallel{true};
}

bool parallel_enabled() {
#ifdef AUTOCUT_HAVE_OPENMP
    return g_parallel.load(std::memory_order_relaxed);
#else
    return false;
#endif
}

void set_parallel(bool on) {
    g_parallel.store(on, std::memory_order_relaxed);
}

int max_threads() {
#ifdef AUTOCUT_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

float dot(const float* a, const float* b, std::size_t dim) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < dim; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

float l2_norm(const float* a, std::size_t dim) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < dim; ++i) {
        acc += a[i] * a[i];
    }
    return std::sqrt(acc);
}

float cosine_similarity(const float* a, const float* b, std::size_t dim) {
    const float na = l2_norm(a, dim);
    const float nb = l2_norm(b, dim);
    if (na == 0.0f || nb == 0.0f) {
        return 0.0f;
    }
    return dot(a, b, dim) / (na * nb);
}

float squared_distance(const float* a, const float* b, std::size_t dim) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < dim; ++i) {
        const float d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

namespace {

inline void assign_row(const float* row, std::size_t dim,
                       const float* codewords, std::size_t k,
                       std::uint16_t* code_out, float* dist_out) {
    std::uint16_t best = 0;
    float best_d = std::numeric_limits<float>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
        const float d = squared_distance(row, codewords + j * dim, dim);
        if (d < best_d) { // strict: equal distances keep the lower index
            best_d = d;
            best = static_cast<std::uint16_t>(j);
        }
    }
    *code_out = best;
    if (dist_out != nullptr) {
        *dist_out = best_d;
    }
}

} // namespace

void assign_nearest_serial(const float* rows, std::size_t n, std::size_t dim,
                           const float* codewords, std::size_t k,
                           std::uint16_t* codes, float* dist2) {
    for (std::size_t i = 0; i < n; ++i) {
        assign_row(rows + i * dim, dim, codewords, k, codes + i,
                   dist2 != nullptr ? dist2 + i : nullptr);
    }
}

void assign_nearest_parallel(const float* rows, std::size_t n, std::size_t dim,
                             const float* codewords, std::size_t k,
                             std::uint16_t* codes, float* dist2) {
#ifdef AUTOCUT_HAVE_OPENMP
    const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < sn; ++i) {
        assign_row(rows + static_cast<std::size_t>(i) * dim, dim, codewords, k,
                   codes + i, dist2 != nullptr ? dist2 + i : nullptr);
    }
#else
    assign_nearest_serial(rows, n, dim, codewords, k, codes, dist2);
#endif
}

void assign_nearest(const float* rows, std::size_t n, std::size_t dim,
                    const float* codewords, std::size_t k,
                    std::uint16_t* codes, float* dist2) {
    if (parallel_enabled() && n >= 2 * kBlock) {
        assign_nearest_parallel(rows, n, dim, codewords, k, codes, dist2);
    } else {
        assign_nearest_serial(rows, n, dim, codewords, k, codes, dist2);
    }
}

namespace {

// Stable counting sort of row indices by code. Each code's member list is
// in ascending row order, which fixes the per-code summation order.
void bucket_rows(const std::uint16_t* codes, std::size_t n, std::size_t k,
                 std::vector<std::uint32_t>& offsets,
                 std::vector<std::uint32_t>& members,
                 std::uint32_t* counts) {
    offsets.assign(k + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++offsets[codes[i] + 1];
    }
    for (std::size_t j = 0; j < k; ++j) {
        counts[j] = offsets[j + 1];
        offsets[j + 1] += offsets[j];
    }
    members.resize(n);
    std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        members[cursor[codes[i]]++] = static_cast<std::uint32_t>(i);
    }
}

inline void sum_bucket(const float* rows, std::size_t dim,
                       const std::uint32_t* members, std::size_t count,
                       double* sum) {
    std::fill(sum, sum + dim, 0.0);
    for (std::size_t m = 0; m < count; ++m) {
        const float* row = rows + static_cast<std::size_t>(members[m]) * dim;
        for (std::size_t d = 0; d < dim; ++d) {
            sum[d] += row[d];
        }
    }
}

} // namespace

void accumulate_codes_serial(const float* rows, std::size_t n, std::size_t dim,
                             const std::uint16_t* codes, std::size_t k,
                             double* sums, std::uint32_t* counts) {
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> members;
    bucket_rows(codes, n, k, offsets, members, counts);
    for (std::size_t j = 0; j < k; ++j) {
        sum_bucket(rows, dim, members.data() + offsets[j], counts[j], sums + j * dim);
    }
}

void accumulate_codes_parallel(const float* rows, std::size_t n, std::size_t dim,
                               const std::uint16_t* codes, std::size_t k,
                               double* sums, std::uint32_t* counts) {
#ifdef AUTOCUT_HAVE_OPENMP
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> members;
    bucket_rows(codes, n, k, offsets, members, counts);
    const std::int64_t sk = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t j = 0; j < sk; ++j) {
        sum_bucket(rows, dim, members.data() + offsets[j], counts[j], sums + j * dim);
    }
#else
    accumulate_codes_serial(rows, n, dim, codes, k, sums, counts);
#endif
}

void accumulate_codes(const float* rows, std::size_t n, std::size_t dim,
                      const std::uint16_t* codes, std::size_t k,
                      double* sums, std::uint32_t* counts) {
    if (parallel_enabled() && n >= 2 * kBlock) {
        accumulate_codes_parallel(rows, n, dim, codes, k, sums, counts);
    } else {
        accumulate_codes_serial(rows, n, dim, codes, k, sums, counts);
    }
}

namespace {

struct TopkBuffer {
    std::size_t k;
    std::vector<ScoredRow> items; // kept sorted: best first

    explicit TopkBuffer(std::size_t k_) : k(k_) { items.reserve(k_ + 1); }

    static bool better(const ScoredRow& a, const ScoredRow& b) {
        if (a.first != b.first) {
            return a.first > b.first;
        }
        return a.second < b.second;
    }

    void push(float sim, std::uint32_t id) {
        const ScoredRow cand{sim, id};
        if (items.size() == k && !better(cand, items.back())) {
            return;
        }
        auto pos = std::upper_bound(items.begin(), items.end(), cand, better);
        items.insert(pos, cand);
        if (items.size() > k) {
            items.pop_back();
        }
    }

    void merge(const TopkBuffer& other) {
        for (const auto& it : other.items) {
            push(it.first, it.second);
        }
    }
};

} // namespace

std::vector<ScoredRow> topk_scan_serial(const float* rows, std::size_t n, std::size_t dim,
                                        const float* query, std::size_t k,
                                        const std::uint32_t* row_ids) {
    TopkBuffer buf(std::min(k, n));
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t id = row_ids != nullptr ? row_ids[i] : static_cast<std::uint32_t>(i);
        buf.push(dot(rows + i * dim, query, dim), id);
    }
    return std::move(buf.items);
}

std::vector<ScoredRow> topk_scan_parallel(const float* rows, std::size_t n, std::size_t dim,
                                          const float* query, std::size_t k,
                                          const std::uint32_t* row_ids) {
#ifdef AUTOCUT_HAVE_OPENMP
    const std::size_t kk = std::min(k, n);
    const std::size_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<TopkBuffer> partial(nblocks, TopkBuffer(kk));
    const std::int64_t sb = static_cast<std::int64_t>(nblocks);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < sb; ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
        const std::size_t hi = std::min(lo + kBlock, n);
        for (std::size_t i = lo; i < hi; ++i) {
            const std::uint32_t id =
                row_ids != nullptr ? row_ids[i] : static_cast<std::uint32_t>(i);
            partial[b].push(dot(rows + i * dim, query, dim), id);
        }
    }
    TopkBuffer out(kk);
    for (std::size_t b = 0; b < nblocks; ++b) {
        out.merge(partial[b]);
    }
    return std::move(out.items);
#else
    return topk_scan_serial(rows, n, dim, query, k, row_ids);
#endif
}

std::vector<ScoredRow> topk_scan(const float* rows, std::size_t n, std::size_t dim,
                                 const float* query, std::size_t k,
                                 const std::uint32_t* row_ids) {
    if (parallel_enabled() && n >= 2 * kBlock) {
        return topk_scan_parallel(rows, n, dim, query, k, row_ids);
    }
    return topk_scan_serial(rows, n, dim, query, k, row_ids);
}

void consecutive_cosines_serial(const float* rows, std::size_t n, std::size_t dim, float* sims) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
        sims[i] = cosine_similarity(rows + i * dim, rows + (i + 1) * dim, dim);
    }
}

void consecutive_cosines_parallel(const float* rows, std::size_t n, std::size_t dim, float* sims) {
#ifdef AUTOCUT_HAVE_OPENMP
    if (n < 2) {
        return;
    }
    const std::int64_t sn = static_cast<std::int64_t>(n - 1);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < sn; ++i) {
        sims[i] = cosine_similarity(rows + static_cast<std::size_t>(i) * dim,
                                    rows + static_cast<std::size_t>(i + 1) * dim, dim);
    }
#else
    consecutive_cosines_serial(rows, n, dim, sims);
#endif
}

void consecutive_cosines(const float* rows, std::size_t n, std::size_t dim, float* sims) {
    if (parallel_enabled() && n >= 2 * kBlock) {
        consecutive_cosines_parallel(rows, n, dim, sims);
    } else {
        consecutive_cosines_serial(rows, n, dim, sims);
    }
}

namespace {

double block_cosine_sum(const float* a, const float* b, std::size_t lo, std::size_t hi,
                        std::size_t dim) {
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        acc += static_cast<double>(cosine_similarity(a + i * dim, b + i * dim, dim));
    }
    return acc;
}

} // namespace

double mean_cosine_serial(const float* a, const float* b, std::size_t n, std::size_t dim) {
    if (n == 0) {
        return 0.0;
    }
    const std::size_t nblocks = (n + kBlock - 1) / kBlock;
    double total = 0.0;
    for (std::size_t blk = 0; blk < nblocks; ++blk) {
        const std::size_t lo = blk * kBlock;
        total += block_cosine_sum(a, b, lo, std::min(lo + kBlock, n), dim);
    }
    return total / static_cast<double>(n);
}

double mean_cosine_parallel(const float* a, const float* b, std::size_t n, std::size_t dim) {
#ifdef AUTOCUT_HAVE_OPENMP
    if (n == 0) {
        return 0.0;
    }
    const std::size_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(nblocks, 0.0);
    const std::int64_t sb = static_cast<std::int64_t>(nblocks);
#pragma omp parallel for schedule(static)
    for (std::int64_t blk = 0; blk < sb; ++blk) {
        const std::size_t lo = static_cast<std::size_t>(blk) * kBlock;
        partial[blk] = block_cosine_sum(a, b, lo, std::min(lo + kBlock, n), dim);
    }
    double total = 0.0;
    for (double p : partial) { // block order fixes the summation order
        total += p;
    }
    return total / static_cast<double>(n);
#else
    return mean_cosine_serial(a, b, n, dim);
#endif
}

double mean_cosine(const float* a, const float* b, std::size_t n, std::size_t dim) {
    if (parallel_enabled() && n >= 2 * kBlock) {
        return mean_cosine_parallel(a, b, n, dim);
    }
    return mean_cosine_serial(a, b, n, dim);
}

} // namespace autocut::kernels
