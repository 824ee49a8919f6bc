#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "opcalc/calculus.hpp"
#include "opcalc/element.hpp"

namespace opcalc {

// ---------------------------------------------------------------------------
// Continuous kernel specification
// ---------------------------------------------------------------------------

/// One kernel A_alpha(k, x_alpha): k ranges over [0,1)^N, x_alpha over the
/// alpha-axes (ascending order), real-valued. grad_sup is the user-supplied
/// L-infinity norm of the full gradient, needed only for the bounds.
struct KernelEntry {
    std::function<double(const RVector& k, const RVector& x_alpha)> eval;
    std::optional<double> grad_sup;
};

/// A multi-kernel operator on [0,1)^N with scalar (M=1) values: the sum over
/// subsets alpha of integral terms with kernels A_alpha. Missing alpha means
/// the zero kernel.
struct MultiKernelSpec {
    int dim = 1;
    std::map<SubsetIndex, KernelEntry> kernels;
};

namespace detail {

inline void validate_kernel_spec(const MultiKernelSpec& spec) {
    if (spec.dim < 1 || spec.dim > kMaxDim)
        throw ValidationError("kernel spec: dim must lie in [1," + std::to_string(kMaxDim) + "]");
    for (const auto& [alpha, entry] : spec.kernels) {
        if (alpha.bits() >= (std::uint32_t{1} << spec.dim))
            throw ValidationError("kernel spec: subset " + alpha.to_string() +
                                  " exceeds dimension");
        if (!entry.eval)
            throw ValidationError("kernel spec: kernel " + alpha.to_string() + " not callable");
        if (entry.grad_sup && (!(*entry.grad_sup >= 0.0) || !std::isfinite(*entry.grad_sup)))
            throw ValidationError("kernel spec: grad_sup for " + alpha.to_string() +
                                  " must be finite and non-negative");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Exact builders
// ---------------------------------------------------------------------------

/// Multiplication by the piecewise-constant matrix function with value
/// cell_matrices[i] on cell i+1: a block-diagonal empty-subset coefficient.
[[nodiscard]] inline AlgebraElement multiplication_operator(
    const PartitionGeometry& geometry, const std::vector<CMatrix>& cell_matrices) {
    const int s = geometry.cells();
    const int m = geometry.components();
    if (static_cast<int>(cell_matrices.size()) != s)
        throw ValidationError("multiplication_operator: expected " + std::to_string(s) +
                              " cell matrices");
    CMatrix mat = CMatrix::Zero(geometry.block_size(), geometry.block_size());
    for (int i = 0; i < s; ++i) {
        const CMatrix& a = cell_matrices[static_cast<std::size_t>(i)];
        if (a.rows() != m || a.cols() != m)
            throw ValidationError("multiplication_operator: cell matrix " + std::to_string(i + 1) +
                                  " must be " + std::to_string(m) + "x" + std::to_string(m));
        mat.block(i * m, i * m, m, m) = a;
    }
    AlgebraElement::CoefficientMap coeffs;
    coeffs.emplace(SubsetIndex::empty(), std::move(mat));
    return AlgebraElement(geometry, coeffs);
}

/// Integration along one axis (1-based): the {axis}-coefficient carries h at
/// block (i,j) whenever cells i and j lie on the same axis row. Requires the
/// partition to be axis-complete: cells whose off-axis slabs overlap must
/// align exactly, otherwise the discrete row sum misrepresents the integral.
[[nodiscard]] inline AlgebraElement integral_operator(const PartitionGeometry& geometry,
                                                      int axis) {
    const int dim = geometry.dim();
    if (axis < 1 || axis > dim)
        throw ValidationError("integral_operator: axis " + std::to_string(axis) +
                              " outside [1," + std::to_string(dim) + "]");
    const int s = geometry.cells();
    const int m = geometry.components();
    const double h = geometry.cell_size();
    const double align_tol = 1e-9 * h;
    const double overlap_floor = h * (1.0 - 1e-12);

    auto off_axis_gap = [&](int i, int j) {
        double gap = 0.0;
        const RVector& a = geometry.vertex(i);
        const RVector& b = geometry.vertex(j);
        for (int n = 0; n < dim; ++n) {
            if (n == axis - 1) continue;
            gap = std::max(gap, std::abs(a[n] - b[n]));
        }
        return gap;
    };

    CMatrix mat = CMatrix::Zero(geometry.block_size(), geometry.block_size());
    for (int i = 1; i <= s; ++i) {
        for (int j = 1; j <= s; ++j) {
            const double gap = off_axis_gap(i, j);
            if (gap <= align_tol) {
                mat.block((i - 1) * m, (j - 1) * m, m, m) =
                    h * CMatrix::Identity(m, m);
            } else if (gap < overlap_floor) {
                // Rows overlap but are not aligned: the axis row through cell i
                // meets cell j only partially.
                throw GeometryNotAxisComplete(axis, i);
            }
        }
    }
    AlgebraElement::CoefficientMap coeffs;
    coeffs.emplace(SubsetIndex::from_axes({axis}), std::move(mat));
    return AlgebraElement(geometry, coeffs);
}

/// Cell remappings, one per component: entry maps[m-1][i-1] is the 1-based
/// target cell p_m(i).
struct CellMapping {
    std::vector<std::vector<int>> maps;
};

/// Change-of-variables / ergodic operator: component m of the result on cell
/// i reads component m of the input on cell p_m(i).
[[nodiscard]] inline AlgebraElement ergodic_operator(const PartitionGeometry& geometry,
                                                     const CellMapping& mapping) {
    const int s = geometry.cells();
    const int m = geometry.components();
    if (static_cast<int>(mapping.maps.size()) != m)
        throw ValidationError("ergodic_operator: expected " + std::to_string(m) + " maps");
    CMatrix mat = CMatrix::Zero(geometry.block_size(), geometry.block_size());
    for (int c = 0; c < m; ++c) {
        const std::vector<int>& p = mapping.maps[static_cast<std::size_t>(c)];
        if (static_cast<int>(p.size()) != s)
            throw ValidationError("ergodic_operator: map " + std::to_string(c + 1) +
                                  " must have " + std::to_string(s) + " entries");
        for (int i = 0; i < s; ++i) {
            const int target = p[static_cast<std::size_t>(i)];
            if (target < 1 || target > s)
                throw ValidationError("ergodic_operator: map " + std::to_string(c + 1) +
                                      " sends cell " + std::to_string(i + 1) + " to " +
                                      std::to_string(target) + ", outside [1," +
                                      std::to_string(s) + "]");
            mat(i * m + c, (target - 1) * m + c) += Complex{1.0, 0.0};
        }
    }
    AlgebraElement::CoefficientMap coeffs;
    coeffs.emplace(SubsetIndex::empty(), std::move(mat));
    return AlgebraElement(geometry, coeffs);
}

// ---------------------------------------------------------------------------
// Midpoint sampling of continuous kernels
// ---------------------------------------------------------------------------

/// Midpoint discretization on the uniform p-grid: the alpha-coefficient at
/// block (i,j) is p^{-|alpha|} A_alpha(a_i + eps, (a_j + eps)_alpha) when the
/// off-alpha vertex coordinates of i and j agree, zero otherwise, with
/// eps = 1/(2p) in every coordinate.
[[nodiscard]] inline AlgebraElement sample_kernel(const MultiKernelSpec& spec, int p) {
    detail::validate_kernel_spec(spec);
    if (p < 1) throw ValidationError("sample_kernel: subdivisions must be positive");
    const PartitionGeometry geometry = PartitionGeometry::uniform_unit_cube(spec.dim, p, 1);
    const int dim = spec.dim;
    const int s = geometry.cells();
    const double eps = 1.0 / (2.0 * p);
    const double align_tol = 1e-12 * geometry.cell_size();

    AlgebraElement::CoefficientMap coeffs;
    for (const auto& [alpha, entry] : spec.kernels) {
        const double weight = 1.0 / static_cast<double>(detail::ipow(p, alpha.cardinality()));
        const std::vector<int> axes = alpha.axes();
        CMatrix mat = CMatrix::Zero(s, s);
        RVector k(dim), x(static_cast<long>(axes.size()));
        for (int i = 1; i <= s; ++i) {
            const RVector& ai = geometry.vertex(i);
            for (int n = 0; n < dim; ++n) k[n] = ai[n] + eps;
            for (int j = 1; j <= s; ++j) {
                const RVector& aj = geometry.vertex(j);
                bool matched = true;
                for (int n = 1; n <= dim && matched; ++n)
                    if (!alpha.contains_axis(n))
                        matched = std::abs(ai[n - 1] - aj[n - 1]) <= align_tol;
                if (!matched) continue;
                for (std::size_t a = 0; a < axes.size(); ++a)
                    x[static_cast<long>(a)] = aj[axes[a] - 1] + eps;
                mat(i - 1, j - 1) = Complex{weight * entry.eval(k, x), 0.0};
            }
        }
        coeffs.emplace(alpha, std::move(mat));
    }
    return AlgebraElement(geometry, std::move(coeffs));
}

/// A-priori gap of the midpoint discretization:
/// (N / 2p) * sum over present alpha of grad_sup[alpha].
[[nodiscard]] inline double approximation_bound(const MultiKernelSpec& spec, int p) {
    detail::validate_kernel_spec(spec);
    if (p < 1) throw ValidationError("approximation_bound: subdivisions must be positive");
    double sum = 0.0;
    for (const auto& [alpha, entry] : spec.kernels) {
        if (!entry.grad_sup)
            throw ValidationError("approximation_bound: grad_sup missing for kernel " +
                                  alpha.to_string());
        sum += *entry.grad_sup;
    }
    return (static_cast<double>(spec.dim) / (2.0 * p)) * sum;
}

/// Finite-difference estimate of ||grad A_alpha||_inf on a probe grid, for
/// callers that have no closed-form bound. Convenience only: bounds never
/// fall back to it silently.
[[nodiscard]] inline double estimate_grad_sup(const MultiKernelSpec& spec, SubsetIndex alpha,
                                              int samples_per_axis = 9) {
    detail::validate_kernel_spec(spec);
    auto it = spec.kernels.find(alpha);
    if (it == spec.kernels.end()) return 0.0;
    if (samples_per_axis < 2)
        throw ValidationError("estimate_grad_sup: need at least 2 samples per axis");
    const int dim = spec.dim;
    const int extra = alpha.cardinality();
    const int total = dim + extra;
    const std::vector<int> axes = alpha.axes();
    const double step = 1e-5;

    long probes = 1;
    for (int d = 0; d < total; ++d) {
        probes *= samples_per_axis;
        if (probes > 2'000'000)
            throw ValidationError("estimate_grad_sup: probe grid too large");
    }

    RVector k(dim), x(extra);
    auto eval_at = [&](const std::vector<double>& point) {
        for (int d = 0; d < dim; ++d) k[d] = point[static_cast<std::size_t>(d)];
        for (int d = 0; d < extra; ++d) x[d] = point[static_cast<std::size_t>(dim + d)];
        return it->second.eval(k, x);
    };

    double best = 0.0;
    std::vector<double> point(static_cast<std::size_t>(total));
    for (long idx = 0; idx < probes; ++idx) {
        long rest = idx;
        for (int d = 0; d < total; ++d) {
            const int cell = static_cast<int>(rest % samples_per_axis);
            rest /= samples_per_axis;
            // Interior probe points, leaving room for the central stencil.
            point[static_cast<std::size_t>(d)] =
                (cell + 0.5) / samples_per_axis * (1.0 - 4.0 * step) + 2.0 * step;
        }
        double sq = 0.0;
        for (int d = 0; d < total; ++d) {
            std::vector<double> hi = point, lo = point;
            hi[static_cast<std::size_t>(d)] += step;
            lo[static_cast<std::size_t>(d)] -= step;
            const double g = (eval_at(hi) - eval_at(lo)) / (2.0 * step);
            sq += g * g;
        }
        best = std::max(best, std::sqrt(sq));
    }
    return best;
}

// ---------------------------------------------------------------------------
// Bounds
// ---------------------------------------------------------------------------

/// The delta-fattened spectrum: union of closed disks of the given radius
/// around the reported spectrum points.
struct SpectralEnclosure {
    double radius = 0.0;
    std::vector<Complex> centers;

    [[nodiscard]] bool contains(Complex z) const {
        for (Complex c : centers)
            if (std::abs(z - c) <= radius) return true;
        return false;
    }
};

[[nodiscard]] inline SpectralEnclosure spectral_enclosure(double delta,
                                                          const SpectrumReport& report) {
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw ValidationError("spectral_enclosure: delta must be finite and non-negative");
    return SpectralEnclosure{delta, report.union_values};
}

/// First-order perturbation bound on the inverse:
/// delta * inv_norm^2 / (1 - delta * inv_norm), valid while delta*inv_norm < 1.
[[nodiscard]] inline double inverse_error_bound(double delta, double inv_norm) {
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw ValidationError("inverse_error_bound: delta must be finite and non-negative");
    if (!(inv_norm >= 0.0) || !std::isfinite(inv_norm))
        throw ValidationError("inverse_error_bound: inv_norm must be finite and non-negative");
    const double t = delta * inv_norm;
    if (t >= 1.0)
        throw BoundDiverges("inverse_error_bound: delta * inv_norm = " + std::to_string(t) +
                            " >= 1");
    return delta * inv_norm * inv_norm / (1.0 - t);
}

// ---------------------------------------------------------------------------
// Refinement embedding and measured gap
// ---------------------------------------------------------------------------

/// Exact embedding of an element on the uniform p-grid into the algebra of
/// the uniform (p*factor)-grid: each alpha-term spreads over the factor^|alpha|
/// aligned fine off-sets with weight factor^{-|alpha|}, leaving the operator's
/// action unchanged. Requires a geometry built by uniform_unit_cube.
[[nodiscard]] inline AlgebraElement embed_in_refinement(const AlgebraElement& x, int factor) {
    if (factor < 1) throw ValidationError("embed_in_refinement: factor must be positive");
    const PartitionGeometry& g = x.geometry();
    const int dim = g.dim();
    const int m = g.components();
    const int p = static_cast<int>(std::llround(std::pow(static_cast<double>(g.cells()),
                                                         1.0 / dim)));
    if (detail::ipow(p, dim) != g.cells() ||
        !(PartitionGeometry::uniform_unit_cube(dim, p, m) == g))
        throw ValidationError("embed_in_refinement: geometry is not a uniform unit-cube grid");
    if (factor == 1) return x;

    const PartitionGeometry fine = PartitionGeometry::uniform_unit_cube(dim, p * factor, m);
    const long fine_ms = fine.block_size();
    const long sub = detail::ipow(factor, dim);

    // Digits of a coarse cell, axis 1 least significant (grid order).
    auto cell_digits = [&](int cell0, int base) {
        std::vector<int> d(static_cast<std::size_t>(dim));
        long rest = cell0;
        for (int n = 0; n < dim; ++n) {
            d[static_cast<std::size_t>(n)] = static_cast<int>(rest % base);
            rest /= base;
        }
        return d;
    };
    auto fine_index = [&](const std::vector<int>& coarse, const std::vector<int>& offset) {
        long idx = 0;
        long stride = 1;
        for (int n = 0; n < dim; ++n) {
            idx += (static_cast<long>(coarse[static_cast<std::size_t>(n)]) * factor +
                    offset[static_cast<std::size_t>(n)]) * stride;
            stride *= static_cast<long>(p) * factor;
        }
        return idx;
    };

    AlgebraElement::CoefficientMap coeffs;
    for (const auto& [alpha, mat] : x.coefficients()) {
        const double weight = 1.0 / static_cast<double>(detail::ipow(factor, alpha.cardinality()));
        CMatrix out = CMatrix::Zero(fine_ms, fine_ms);
        for (int bi = 0; bi < g.cells(); ++bi) {
            const std::vector<int> di = cell_digits(bi, p);
            for (int bj = 0; bj < g.cells(); ++bj) {
                if (mat.block(bi * m, bj * m, m, m).isZero(0.0)) continue;
                const std::vector<int> dj = cell_digits(bj, p);
                for (long t = 0; t < sub; ++t) {
                    std::vector<int> ti(static_cast<std::size_t>(dim));
                    long rest = t;
                    for (int n = 0; n < dim; ++n) {
                        ti[static_cast<std::size_t>(n)] = static_cast<int>(rest % factor);
                        rest /= factor;
                    }
                    // Offsets of the source cell: equal to the target's except
                    // along alpha, where every fine offset contributes.
                    std::vector<std::vector<int>> source_offsets{ti};
                    for (int axis : alpha.axes()) {
                        std::vector<std::vector<int>> next;
                        next.reserve(source_offsets.size() * static_cast<std::size_t>(factor));
                        for (const auto& base : source_offsets)
                            for (int v = 0; v < factor; ++v) {
                                std::vector<int> cand = base;
                                cand[static_cast<std::size_t>(axis - 1)] = v;
                                next.push_back(std::move(cand));
                            }
                        source_offsets = std::move(next);
                    }
                    const long fi = fine_index(di, ti);
                    for (const auto& tj : source_offsets) {
                        const long fj = fine_index(dj, tj);
                        out.block(fi * m, fj * m, m, m) +=
                            weight * mat.block(bi * m, bj * m, m, m);
                    }
                }
            }
        }
        coeffs.emplace(alpha, std::move(out));
    }
    return AlgebraElement(fine, std::move(coeffs));
}

/// Measured discretization gap ||A_c - A(p)||, with the continuum stood in
/// for by the fine (p*fine_factor)-grid sampling. The difference of the two
/// fine-grid elements has an exact block operator norm, so the only slack is
/// the fine grid itself: the estimate is lower-biased.
[[nodiscard]] inline double measured_approximation_gap(const MultiKernelSpec& spec, int p,
                                                       int fine_factor = 8) {
    if (fine_factor < 2)
        throw ValidationError("measured_approximation_gap: fine_factor must be at least 2");
    const AlgebraElement fine = sample_kernel(spec, p * fine_factor);
    const AlgebraElement coarse = embed_in_refinement(sample_kernel(spec, p), fine_factor);
    return operator_norm(subtract(fine, coarse));
}

}  // namespace opcalc
