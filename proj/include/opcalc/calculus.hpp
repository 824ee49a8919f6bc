#pragma once

#include <algorithm>
#include <future>
#include <map>
#include <numbers>
#include <vector>

#include "opcalc/element.hpp"
#include "opcalc/matrix_functions.hpp"

namespace opcalc {

namespace detail {

/// Map a function over representation blocks, concurrently when the blocks
/// are large enough for thread startup to pay off. Blocks are independent;
/// results gather into a fresh vector.
template <typename F>
std::vector<CMatrix> map_blocks(const std::vector<CMatrix>& blocks, F&& f) {
    std::vector<CMatrix> out(blocks.size());
    const bool parallel = blocks.size() >= 2 && !blocks.empty() && blocks[0].rows() >= 128;
    if (parallel) {
        std::vector<std::future<CMatrix>> futures;
        futures.reserve(blocks.size());
        for (std::size_t i = 0; i < blocks.size(); ++i)
            futures.push_back(std::async(std::launch::async, [&blocks, &f, i] {
                return f(blocks[i], SubsetIndex{static_cast<std::uint32_t>(i)});
            }));
        for (std::size_t i = 0; i < blocks.size(); ++i) out[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < blocks.size(); ++i)
            out[i] = f(blocks[i], SubsetIndex{static_cast<std::uint32_t>(i)});
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Spectrum
// ---------------------------------------------------------------------------

struct SpectrumReport {
    /// Eigenvalues of each representation block, with multiplicity,
    /// sorted by (real, imag). Every list has exactly M*S entries.
    std::map<SubsetIndex, std::vector<Complex>> per_subset;
    /// Union of the per-subset lists, deduplicated within dedup_tolerance.
    std::vector<Complex> union_values;
    /// Per subset alpha: eigenvalues of its block that are not within
    /// dedup_tolerance of any eigenvalue of a block of smaller cardinality.
    std::map<SubsetIndex, std::vector<Complex>> layers;
    double dedup_tolerance = 0.0;
};

namespace detail {

inline void sort_complex(std::vector<Complex>& v) {
    std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
}

inline bool near_any(Complex v, const std::vector<Complex>& pool, double tol) {
    for (Complex w : pool)
        if (std::abs(v - w) <= tol) return true;
    return false;
}

}  // namespace detail

/// Eigenvalues of every representation block plus the deduplicated union and
/// the layer decomposition (new spectrum appearing at each subset).
[[nodiscard]] inline SpectrumReport spectrum(const AlgebraElement& x, double dedup_tol) {
    if (!(dedup_tol >= 0.0))
        throw ValidationError("spectrum: dedup tolerance must be non-negative");
    const Representation rep = represent(x);

    SpectrumReport report;
    double scale = 0.0;
    for (const CMatrix& b : rep.blocks()) scale = std::max(scale, b.norm());
    report.dedup_tolerance = dedup_tol > 0.0 ? dedup_tol : 1e-8 * std::max(1.0, scale);

    for (std::size_t mask = 0; mask < rep.blocks().size(); ++mask) {
        const SubsetIndex alpha{static_cast<std::uint32_t>(mask)};
        std::vector<Complex> evs;
        try {
            evs = block_eigenvalues(rep.blocks()[mask]);
        } catch (const SolverFailure&) {
            throw SolverFailure("eigenvalue solver failed on block " + alpha.to_string());
        }
        detail::sort_complex(evs);
        report.per_subset.emplace(alpha, std::move(evs));
    }

    const double tol = report.dedup_tolerance;
    for (const auto& [alpha, evs] : report.per_subset)
        for (Complex v : evs)
            if (!detail::near_any(v, report.union_values, tol)) report.union_values.push_back(v);
    detail::sort_complex(report.union_values);

    for (const auto& [alpha, evs] : report.per_subset) {
        std::vector<Complex> layer;
        for (Complex v : evs) {
            bool seen_below = false;
            for (const auto& [beta, other] : report.per_subset) {
                if (beta.cardinality() >= alpha.cardinality()) continue;
                if (detail::near_any(v, other, tol)) {
                    seen_below = true;
                    break;
                }
            }
            if (!seen_below && !detail::near_any(v, layer, tol)) layer.push_back(v);
        }
        detail::sort_complex(layer);
        report.layers.emplace(alpha, std::move(layer));
    }
    return report;
}

[[nodiscard]] inline SpectrumReport spectrum(const AlgebraElement& x) { return spectrum(x, 0.0); }

// ---------------------------------------------------------------------------
// Norm, determinant, trace
// ---------------------------------------------------------------------------

/// L2 -> L2 operator norm: the largest singular value over all blocks.
[[nodiscard]] inline double operator_norm(const AlgebraElement& x) {
    const Representation rep = represent(x);
    double best = 0.0;
    for (const CMatrix& b : rep.blocks()) {
        Eigen::BDCSVD<CMatrix> svd(b);
        if (svd.singularValues().size() > 0) best = std::max(best, svd.singularValues()(0));
    }
    return best;
}

[[nodiscard]] inline Complex det(const AlgebraElement& x) {
    const Representation rep = represent(x);
    Complex prod{1.0, 0.0};
    for (const CMatrix& b : rep.blocks()) prod *= b.determinant();
    return prod;
}

[[nodiscard]] inline Complex trace(const AlgebraElement& x) {
    const Representation rep = represent(x);
    Complex sum{0.0, 0.0};
    for (const CMatrix& b : rep.blocks()) sum += b.trace();
    return sum;
}

/// Sum of blockwise log-determinants (principal logs of LU pivots), immune to
/// the over/underflow det() suffers on large blocks. Agrees with log(det(X))
/// only modulo 2*pi*i.
[[nodiscard]] inline Complex logdet(const AlgebraElement& x) {
    const Representation rep = represent(x);
    Complex sum{0.0, 0.0};
    for (std::size_t mask = 0; mask < rep.blocks().size(); ++mask) {
        const CMatrix& b = rep.blocks()[mask];
        Eigen::FullPivLU<CMatrix> lu(b);
        const RankTest t = rank_test(lu);
        if (t.singular) throw NotInvertible(SubsetIndex{static_cast<std::uint32_t>(mask)}, t.condition);
        const auto diag = lu.matrixLU().diagonal();
        for (long i = 0; i < diag.size(); ++i) sum += std::log(diag[i]);
        if (lu.permutationP().determinant() * lu.permutationQ().determinant() < 0)
            sum += Complex{0.0, std::numbers::pi};
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Functional calculus
// ---------------------------------------------------------------------------

/// Inverse element: blockwise inverse, transformed back to coefficients.
[[nodiscard]] inline AlgebraElement invert(const AlgebraElement& x) {
    const Representation rep = represent(x);
    std::vector<CMatrix> inv = detail::map_blocks(
        rep.blocks(), [](const CMatrix& b, SubsetIndex alpha) { return block_inverse(b, alpha); });
    return unrepresent(Representation(x.geometry(), std::move(inv)));
}

/// f(X): the function spec evaluated on every block, transformed back.
[[nodiscard]] inline AlgebraElement apply_function(const AlgebraElement& x,
                                                   const MatrixFunctionSpec& spec) {
    const Representation rep = represent(x);
    std::vector<CMatrix> mapped =
        detail::map_blocks(rep.blocks(), [&spec](const CMatrix& b, SubsetIndex alpha) {
            return apply_block_function(b, spec, alpha);
        });
    return unrepresent(Representation(x.geometry(), std::move(mapped)));
}

/// Solve X w = rhs for w on the refined grid of rhs.
[[nodiscard]] inline RefinedGridFunction solve(const AlgebraElement& x,
                                               const RefinedGridFunction& rhs) {
    return apply(invert(x), rhs);
}

}  // namespace opcalc
