#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

// Data-parallel inner loops shared by the quantizer, the vector index and
// the segmenter. Every kernel has a _serial reference variant and an
// OpenMP variant; both run the same blocked arithmetic, so results are
// bit-identical for any thread count. The unsuffixed name dispatches on
// parallel_enabled().

namespace autocut::kernels {

// Rows per reduction block. Fixed independent of thread count: block
// partials are combined in block order, which pins the float summation
// order.
inline constexpr std::size_t kBlock = 1024;

bool parallel_enabled();
void set_parallel(bool on);
int max_threads();

float dot(const float* a, const float* b, std::size_t dim);
float l2_norm(const float* a, std::size_t dim);

// Returns 0 when either vector is all-zero.
float cosine_similarity(const float* a, const float* b, std::size_t dim);

// Squared Euclidean distance, float accumulation (assignment and the
// encode oracle must share arithmetic so ties resolve identically).
float squared_distance(const float* a, const float* b, std::size_t dim);

// Per-row argmin over k codewords of squared distance; ties take the
// lowest codeword index. dist2 may be null.
void assign_nearest_serial(const float* rows, std::size_t n, std::size_t dim,
                           const float* codewords, std::size_t k,
                           std::uint16_t* codes, float* dist2);
void assign_nearest_parallel(const float* rows, std::size_t n, std::size_t dim,
                             const float* codewords, std::size_t k,
                             std::uint16_t* codes, float* dist2);
void assign_nearest(const float* rows, std::size_t n, std::size_t dim,
                    const float* codewords, std::size_t k,
                    std::uint16_t* codes, float* dist2);

// Per-code sums (double) and member counts. Rows are bucketed by code
// first and each bucket is summed in ascending row order, so the result
// does not depend on the thread count.
void accumulate_codes_serial(const float* rows, std::size_t n, std::size_t dim,
                             const std::uint16_t* codes, std::size_t k,
                             double* sums, std::uint32_t* counts);
void accumulate_codes_parallel(const float* rows, std::size_t n, std::size_t dim,
                               const std::uint16_t* codes, std::size_t k,
                               double* sums, std::uint32_t* counts);
void accumulate_codes(const float* rows, std::size_t n, std::size_t dim,
                      const std::uint16_t* codes, std::size_t k,
                      double* sums, std::uint32_t* counts);

// Top-k inner products of a query against n rows. Total order:
// similarity descending, then row index ascending, so ties are stable
// across serial/parallel and flat/partitioned paths. row_ids may remap
// local positions to global row indices (null = identity).
using ScoredRow = std::pair<float, std::uint32_t>;
std::vector<ScoredRow> topk_scan_serial(const float* rows, std::size_t n, std::size_t dim,
                                        const float* query, std::size_t k,
                                        const std::uint32_t* row_ids);
std::vector<ScoredRow> topk_scan_parallel(const float* rows, std::size_t n, std::size_t dim,
                                          const float* query, std::size_t k,
                                          const std::uint32_t* row_ids);
std::vector<ScoredRow> topk_scan(const float* rows, std::size_t n, std::size_t dim,
                                 const float* query, std::size_t k,
                                 const std::uint32_t* row_ids);

// sims[i] = cos(row_i, row_{i+1}) for i in [0, n-1).
void consecutive_cosines_serial(const float* rows, std::size_t n, std::size_t dim, float* sims);
void consecutive_cosines_parallel(const float* rows, std::size_t n, std::size_t dim, float* sims);
void consecutive_cosines(const float* rows, std::size_t n, std::size_t dim, float* sims);

// Mean over rows of cos(a_i, b_i); blocked ordered summation.
double mean_cosine_serial(const float* a, const float* b, std::size_t n, std::size_t dim);
double mean_cosine_parallel(const float* a, const float* b, std::size_t n, std::size_t dim);
double mean_cosine(const float* a, const float* b, std::size_t n, std::size_t dim);

} // namespace autocut::kernels
