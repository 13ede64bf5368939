#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "repalign/errors.hpp"
#include "repalign/matrix.hpp"
#include "repalign/rng.hpp"
#include "repalign/svd.hpp"

namespace repalign {

// Per-dimension equal-width discretization of projections. Dimension j gets
// bin_counts[j] bins; dimensions with zero bins or a degenerate value range
// are listed in skipped_dims and excluded from every count.
struct BinnedUniverse {
    std::size_t dims = 0;
    std::vector<long long> bin_counts;
    std::vector<std::vector<double>> edges;  // empty for skipped dims
    // items x dims; -1 marks a skipped dimension.
    std::vector<std::vector<int>> assignment;
    std::vector<std::size_t> skipped_dims;

    std::size_t items() const { return assignment.size(); }

    bool skipped(std::size_t dim) const {
        return std::find(skipped_dims.begin(), skipped_dims.end(), dim) != skipped_dims.end();
    }

    long long total_bins() const {
        long long total = 0;
        for (std::size_t j = 0; j < dims; ++j)
            if (!skipped(j)) total += bin_counts[j];
        return total;
    }
};

// B_j = floor(w * lambda_j / lambda_1); B_1 = w exactly.
inline std::vector<long long> compute_bins(const std::vector<double>& singular_values,
                                           long long w) {
    if (singular_values.empty()) throw value_error("compute_bins: no singular values");
    if (w <= 0) throw value_error("compute_bins: w must be positive");
    const double lead = singular_values.front();
    if (!(lead > 0.0)) throw value_error("compute_bins: leading singular value must be > 0");
    std::vector<long long> bins(singular_values.size());
    for (std::size_t j = 0; j < singular_values.size(); ++j) {
        const double v = singular_values[j];
        if (v < 0.0 || (j > 0 && v > singular_values[j - 1] + 1e-12))
            throw value_error("compute_bins: singular values must descend and be >= 0");
        bins[j] = static_cast<long long>(
            std::floor(static_cast<double>(w) * (v / lead)));
    }
    return bins;
}

// Coordinates of common-space embeddings along the top-d left singular
// vectors of the reference adapter's weight matrix.
inline Matrix project_onto_principal(const Matrix& z, const Matrix& w_ref, std::size_t d) {
    if (z.cols() != w_ref.rows())
        throw dim_error("project_onto_principal: embedding dim " + std::to_string(z.cols()) +
                        " != adapter output dim " + std::to_string(w_ref.rows()));
    const std::size_t max_d = std::min(w_ref.rows(), w_ref.cols());
    if (d == 0 || d > max_d)
        throw dim_error("project_onto_principal: d=" + std::to_string(d) +
                        " outside [1, " + std::to_string(max_d) + "]");
    const SvdResult dec = svd(w_ref);
    Matrix proj(z.rows(), d);
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < z.cols(); ++k) s += z(i, k) * dec.u(k, j);
            proj(i, j) = s;
        }
    return proj;
}

// Equal-width bins over each dimension's own [min, max]; the upper edge
// value lands in the last bin. Degenerate dimensions are skipped, not errors.
inline BinnedUniverse bin_universe(const Matrix& projections,
                                   const std::vector<long long>& bin_counts) {
    if (bin_counts.size() != projections.cols())
        throw dim_error("bin_universe: bin count per dimension required");
    if (!projections.all_finite())
        throw value_error("bin_universe: projections must be finite");
    BinnedUniverse u;
    u.dims = projections.cols();
    u.bin_counts = bin_counts;
    u.edges.resize(u.dims);
    u.assignment.assign(projections.rows(), std::vector<int>(u.dims, -1));
    for (std::size_t j = 0; j < u.dims; ++j) {
        const long long b = bin_counts[j];
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < projections.rows(); ++i) {
            lo = std::min(lo, projections(i, j));
            hi = std::max(hi, projections(i, j));
        }
        if (b < 1 || lo == hi) {
            u.skipped_dims.push_back(j);
            continue;
        }
        const double width = (hi - lo) / static_cast<double>(b);
        auto& e = u.edges[j];
        e.resize(static_cast<std::size_t>(b) + 1);
        for (long long k = 0; k <= b; ++k) e[static_cast<std::size_t>(k)] = lo + width * static_cast<double>(k);
        e.back() = hi;
        for (std::size_t i = 0; i < projections.rows(); ++i) {
            const long long raw =
                static_cast<long long>(std::floor((projections(i, j) - lo) / width));
            u.assignment[i][j] = static_cast<int>(std::min(b - 1, std::max(0LL, raw)));
        }
    }
    return u;
}

// Constructs a universe directly from bin assignments (used by the set-cover
// reduction and small test instances). Nominal integer edges.
inline BinnedUniverse universe_from_assignment(const std::vector<long long>& bin_counts,
                                               const std::vector<std::vector<int>>& assignment) {
    BinnedUniverse u;
    u.dims = bin_counts.size();
    u.bin_counts = bin_counts;
    u.edges.resize(u.dims);
    for (std::size_t j = 0; j < u.dims; ++j) {
        if (bin_counts[j] < 1) {
            u.skipped_dims.push_back(j);
            continue;
        }
        u.edges[j].resize(static_cast<std::size_t>(bin_counts[j]) + 1);
        std::iota(u.edges[j].begin(), u.edges[j].end(), 0.0);
    }
    for (const auto& row : assignment) {
        if (row.size() != u.dims) throw dim_error("universe_from_assignment: ragged row");
        for (std::size_t j = 0; j < u.dims; ++j) {
            if (u.skipped(j)) continue;
            if (row[j] < 0 || row[j] >= bin_counts[j])
                throw value_error("universe_from_assignment: bin index out of range");
        }
    }
    u.assignment = assignment;
    return u;
}

namespace detail {

// Occupancy bitmap over the flattened non-skipped bins of a universe.
struct BinMask {
    std::vector<std::size_t> dim_offset;  // npos for skipped dims
    std::vector<std::uint64_t> words;
    std::size_t bits = 0;

    explicit BinMask(const BinnedUniverse& u) {
        dim_offset.assign(u.dims, static_cast<std::size_t>(-1));
        std::size_t off = 0;
        for (std::size_t j = 0; j < u.dims; ++j) {
            if (u.skipped(j)) continue;
            dim_offset[j] = off;
            off += static_cast<std::size_t>(u.bin_counts[j]);
        }
        bits = off;
        words.assign((off + 63) / 64, 0);
    }

    void reset() { std::fill(words.begin(), words.end(), 0); }

    void mark(std::size_t dim, int bin) {
        const std::size_t b = dim_offset[dim] + static_cast<std::size_t>(bin);
        words[b / 64] |= std::uint64_t{1} << (b % 64);
    }

    void mark_item(const BinnedUniverse& u, std::size_t item) {
        for (std::size_t j = 0; j < u.dims; ++j)
            if (u.assignment[item][j] >= 0) mark(j, u.assignment[item][j]);
    }

    std::size_t count() const {
        std::size_t c = 0;
        for (std::uint64_t w : words) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }
};

inline std::vector<std::vector<std::uint64_t>> item_masks(const BinnedUniverse& u) {
    BinMask scratch(u);
    std::vector<std::vector<std::uint64_t>> out(u.items());
    for (std::size_t i = 0; i < u.items(); ++i) {
        scratch.reset();
        scratch.mark_item(u, i);
        out[i] = scratch.words;
    }
    return out;
}

inline std::size_t popcount_words(const std::vector<std::uint64_t>& words) {
    std::size_t c = 0;
    for (std::uint64_t w : words) c += static_cast<std::size_t>(std::popcount(w));
    return c;
}

}  // namespace detail

// Gap(S): total number of empty bins over non-skipped dimensions.
inline long long gap(const std::vector<std::size_t>& subset, const BinnedUniverse& u) {
    detail::BinMask mask(u);
    for (std::size_t item : subset) {
        if (item >= u.items())
            throw value_error("gap: item index " + std::to_string(item) + " out of range");
        mask.mark_item(u, item);
    }
    return u.total_bins() - static_cast<long long>(mask.count());
}

enum class Termination { full_coverage, budget_reached, no_improvement };

inline std::string to_string(Termination t) {
    switch (t) {
        case Termination::full_coverage: return "full_coverage";
        case Termination::budget_reached: return "budget_reached";
        case Termination::no_improvement: return "no_improvement";
    }
    throw value_error("unknown termination");
}

inline Termination termination_from_string(const std::string& s) {
    if (s == "full_coverage") return Termination::full_coverage;
    if (s == "budget_reached") return Termination::budget_reached;
    if (s == "no_improvement") return Termination::no_improvement;
    throw value_error("unknown termination: " + s);
}

struct SelectionResult {
    std::vector<std::size_t> chosen;
    std::vector<long long> gap_trace;  // Gap(S) after each pick
    long long empty_total = 0;
    long long empty_uncoverable = 0;
    Termination termination = Termination::full_coverage;
};

// Greedy bin-coverage: repeatedly add the item minimizing Gap(S + {i}), ties
// to the lowest index. Stops at full coverage of the coverable bins, at the
// budget, or when no item strictly reduces Gap.
inline SelectionResult greedy_select(const BinnedUniverse& u,
                                     std::optional<std::size_t> budget = std::nullopt) {
    if (u.items() == 0) throw value_error("greedy_select: empty universe");
    if (budget && *budget == 0) throw value_error("greedy_select: budget must be >= 1");

    const auto masks = detail::item_masks(u);
    detail::BinMask covered(u);
    detail::BinMask all(u);
    for (std::size_t i = 0; i < u.items(); ++i) all.mark_item(u, i);
    const long long total = u.total_bins();
    const long long uncoverable = total - static_cast<long long>(all.count());

    SelectionResult res;
    res.empty_uncoverable = uncoverable;
    long long cur_gap = total;
    std::vector<bool> in_set(u.items(), false);

    while (true) {
        if (cur_gap == uncoverable) {
            res.termination = Termination::full_coverage;
            break;
        }
        if (budget && res.chosen.size() == *budget) {
            res.termination = Termination::budget_reached;
            break;
        }
        std::size_t best_item = u.items();
        std::size_t best_gain = 0;
        for (std::size_t i = 0; i < u.items(); ++i) {
            if (in_set[i]) continue;
            std::size_t gain = 0;
            for (std::size_t w = 0; w < covered.words.size(); ++w)
                gain += static_cast<std::size_t>(
                    std::popcount(masks[i][w] & ~covered.words[w]));
            if (gain > best_gain) {
                best_gain = gain;
                best_item = i;
            }
        }
        if (best_item == u.items() || best_gain == 0) {
            res.termination = Termination::no_improvement;
            break;
        }
        in_set[best_item] = true;
        res.chosen.push_back(best_item);
        for (std::size_t w = 0; w < covered.words.size(); ++w)
            covered.words[w] |= masks[best_item][w];
        cur_gap -= static_cast<long long>(best_gain);
        res.gap_trace.push_back(cur_gap);
    }
    res.empty_total = cur_gap;
    return res;
}

// Exhaustive minimum bin cover, subsets enumerated in increasing size.
inline std::size_t brute_force_min_cover(const BinnedUniverse& u) {
    if (u.items() > 20)
        throw value_error("brute_force_min_cover: capped at 20 items, got " +
                          std::to_string(u.items()));
    const auto masks = detail::item_masks(u);
    const std::size_t n = u.items();
    std::vector<std::uint64_t> coverable(masks.empty() ? 0 : masks[0].size(), 0);
    for (const auto& m : masks)
        for (std::size_t w = 0; w < m.size(); ++w) coverable[w] |= m[w];
    const std::size_t target = detail::popcount_words(coverable);
    if (target == 0) return 0;

    std::vector<std::uint64_t> acc(coverable.size());
    for (std::size_t k = 1; k <= n; ++k) {
        // Gosper's hack over all k-subsets of n items.
        std::uint32_t mask = (k == 32) ? 0xFFFFFFFFu : ((1u << k) - 1u);
        while (mask < (1u << n)) {
            std::fill(acc.begin(), acc.end(), 0);
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1u << i))
                    for (std::size_t w = 0; w < acc.size(); ++w) acc[w] |= masks[i][w];
            if (detail::popcount_words(acc) == target) return k;
            const std::uint32_t c = mask & (~mask + 1u);
            const std::uint32_t r = mask + c;
            mask = (((r ^ mask) >> 2) / c) | r;
        }
    }
    return n;  // unreachable: the full set always covers the coverable bins
}

// Maximum number of bins covered by any k-subset, exhaustively.
inline std::size_t brute_force_best_coverage(const BinnedUniverse& u, std::size_t k) {
    if (u.items() > 15)
        throw value_error("brute_force_best_coverage: capped at 15 items");
    if (k > 6) throw value_error("brute_force_best_coverage: capped at k <= 6");
    if (k == 0) return 0;
    const auto masks = detail::item_masks(u);
    const std::size_t n = u.items();
    if (k >= n) {
        std::vector<std::uint64_t> acc(masks[0].size(), 0);
        for (const auto& m : masks)
            for (std::size_t w = 0; w < acc.size(); ++w) acc[w] |= m[w];
        return detail::popcount_words(acc);
    }
    std::size_t best = 0;
    std::vector<std::uint64_t> acc(masks[0].size());
    std::uint32_t mask = (1u << k) - 1u;
    while (mask < (1u << n)) {
        std::fill(acc.begin(), acc.end(), 0);
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i))
                for (std::size_t w = 0; w < acc.size(); ++w) acc[w] |= masks[i][w];
        best = std::max(best, detail::popcount_words(acc));
        const std::uint32_t c = mask & (~mask + 1u);
        const std::uint32_t r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    return best;
}

// Set-cover reduction: element universe 1..n becomes n dimensions of 3 bins.
// Subset S_i becomes item V_i placing bin 0 where d is covered and bin 1
// elsewhere; N2 occupies bin 1 everywhere, N3 bin 2 everywhere. Item order:
// V_1..V_l, N2, N3.
inline BinnedUniverse setcover_to_binmap(std::size_t universe_size,
                                         const std::vector<std::vector<std::size_t>>& subsets) {
    if (universe_size == 0) throw value_error("setcover_to_binmap: empty universe");
    if (subsets.empty()) throw value_error("setcover_to_binmap: no subsets");
    std::vector<std::vector<int>> assignment;
    for (const auto& s : subsets) {
        std::vector<int> row(universe_size, 1);
        for (std::size_t d : s) {
            if (d < 1 || d > universe_size)
                throw value_error("setcover_to_binmap: element " + std::to_string(d) +
                                  " outside [1, " + std::to_string(universe_size) + "]");
            row[d - 1] = 0;
        }
        assignment.push_back(std::move(row));
    }
    assignment.emplace_back(universe_size, 1);  // N2
    assignment.emplace_back(universe_size, 2);  // N3
    return universe_from_assignment(std::vector<long long>(universe_size, 3), assignment);
}

struct CoverageTestResult {
    double p_value = 0.0;
    double random_mean = 0.0;
    double random_std = 0.0;
    long long selected_empty = 0;
};

// Permutation test of a selection's empty-bin count against uniform random
// subsets of the same (or a given) size. p = (1 + #{count <= selected}) /
// (trials + 1); per-trial seeds derive from `seed` so trials are independent.
inline CoverageTestResult coverage_permutation_test(const BinnedUniverse& u,
                                                    const std::vector<std::size_t>& selected,
                                                    std::size_t subset_size, std::size_t trials,
                                                    std::uint64_t seed) {
    if (trials < 1) throw value_error("coverage_permutation_test: trials must be >= 1");
    if (subset_size < 1 || subset_size > u.items())
        throw value_error("coverage_permutation_test: subset_size outside [1, items]");
    CoverageTestResult res;
    res.selected_empty = gap(selected, u);
    std::size_t not_better = 0;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng(mix_seed(seed, t));
        const auto subset = rng.sample_without_replacement(u.items(), subset_size);
        const long long count = gap(subset, u);
        if (count <= res.selected_empty) ++not_better;
        sum += static_cast<double>(count);
        sum_sq += static_cast<double>(count) * static_cast<double>(count);
    }
    const double n = static_cast<double>(trials);
    res.p_value = (1.0 + static_cast<double>(not_better)) / (n + 1.0);
    res.random_mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - res.random_mean * res.random_mean);
    res.random_std = std::sqrt(var);
    return res;
}

// Indices of the `count` largest / smallest projection values along `dim`,
// each ordered by extremity, ties by ascending index.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> extreme_items(
    const Matrix& projections, std::size_t dim, std::size_t count) {
    if (dim >= projections.cols())
        throw dim_error("extreme_items: dim " + std::to_string(dim) + " >= " +
                        std::to_string(projections.cols()));
    if (count == 0 || count > projections.rows())
        throw value_error("extreme_items: count outside [1, items]");
    std::vector<std::size_t> idx(projections.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<std::size_t> top = idx, bottom = idx;
    std::stable_sort(top.begin(), top.end(), [&](std::size_t a, std::size_t b) {
        return projections(a, dim) > projections(b, dim);
    });
    std::stable_sort(bottom.begin(), bottom.end(), [&](std::size_t a, std::size_t b) {
        return projections(a, dim) < projections(b, dim);
    });
    top.resize(count);
    bottom.resize(count);
    return {std::move(top), std::move(bottom)};
}

}  // namespace repalign
