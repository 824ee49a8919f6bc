#pragma once

#include <random>
#include <vector>

#include "opcalc/element.hpp"

namespace opcalc {

// Seeded generation helpers. std::uniform_*_distribution output differs
// across standard libraries, so everything here draws bits directly from
// mt19937_64: the same seed yields the same spec everywhere.

[[nodiscard]] inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

[[nodiscard]] inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

[[nodiscard]] inline Complex random_complex(std::mt19937_64& rng, double amplitude = 1.0) {
    const double re = uniform_range(rng, -amplitude, amplitude);
    const double im = uniform_range(rng, -amplitude, amplitude);
    return Complex{re, im};
}

[[nodiscard]] inline int random_int(std::mt19937_64& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

/// Random disjoint geometry: distinct lattice points scaled by the cell size,
/// so disjointness holds exactly.
[[nodiscard]] inline PartitionGeometry random_geometry(std::mt19937_64& rng, int dim, int cells,
                                                       int components, double cell_size = 0.25) {
    int side = 1;
    while (detail::ipow(side, dim) < cells) ++side;
    ++side;
    const long lattice = detail::ipow(side, dim);
    std::vector<long> points(static_cast<std::size_t>(lattice));
    for (long i = 0; i < lattice; ++i) points[static_cast<std::size_t>(i)] = i;
    for (long i = lattice - 1; i > 0; --i) {
        const long j = static_cast<long>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
    }
    std::vector<RVector> vertices;
    vertices.reserve(static_cast<std::size_t>(cells));
    for (int c = 0; c < cells; ++c) {
        long rest = points[static_cast<std::size_t>(c)];
        RVector v(dim);
        for (int n = 0; n < dim; ++n) {
            v[n] = cell_size * static_cast<double>(rest % side);
            rest /= side;
        }
        vertices.push_back(std::move(v));
    }
    return PartitionGeometry(dim, components, cell_size, std::move(vertices));
}

/// Random element: each subset coefficient present with probability fill,
/// entries uniform in the complex square of the given amplitude.
[[nodiscard]] inline AlgebraElement random_element(std::mt19937_64& rng,
                                                   const PartitionGeometry& geometry,
                                                   double fill = 0.75, double amplitude = 1.0) {
    const int ms = geometry.block_size();
    AlgebraElement::CoefficientMap coeffs;
    for (std::size_t mask = 0; mask < geometry.subset_count(); ++mask) {
        if (uniform01(rng) > fill) continue;
        CMatrix mat(ms, ms);
        for (long r = 0; r < ms; ++r)
            for (long c = 0; c < ms; ++c) mat(r, c) = random_complex(rng, amplitude);
        coeffs.emplace(SubsetIndex{static_cast<std::uint32_t>(mask)}, std::move(mat));
    }
    return AlgebraElement(geometry, std::move(coeffs));
}

/// Random element with dyadic-rational entries (k/8, |k| <= 16): sums and
/// differences of these are exact in floating point, which the exactness
/// properties (linearity, adjoint) rely on.
[[nodiscard]] inline AlgebraElement random_dyadic_element(std::mt19937_64& rng,
                                                          const PartitionGeometry& geometry,
                                                          double fill = 0.75) {
    const int ms = geometry.block_size();
    AlgebraElement::CoefficientMap coeffs;
    for (std::size_t mask = 0; mask < geometry.subset_count(); ++mask) {
        if (uniform01(rng) > fill) continue;
        CMatrix mat(ms, ms);
        for (long r = 0; r < ms; ++r)
            for (long c = 0; c < ms; ++c)
                mat(r, c) = Complex{random_int(rng, -16, 16) / 8.0, random_int(rng, -16, 16) / 8.0};
        coeffs.emplace(SubsetIndex{static_cast<std::uint32_t>(mask)}, std::move(mat));
    }
    return AlgebraElement(geometry, std::move(coeffs));
}

/// Random invertible element, built in the representation: each block is a
/// random matrix pushed away from singularity by a diagonal shift larger
/// than its Frobenius norm, keeping every block condition number small.
[[nodiscard]] inline AlgebraElement random_invertible_element(std::mt19937_64& rng,
                                                              const PartitionGeometry& geometry,
                                                              double amplitude = 1.0) {
    const int ms = geometry.block_size();
    std::vector<CMatrix> blocks;
    blocks.reserve(geometry.subset_count());
    for (std::size_t mask = 0; mask < geometry.subset_count(); ++mask) {
        CMatrix b(ms, ms);
        for (long r = 0; r < ms; ++r)
            for (long c = 0; c < ms; ++c) b(r, c) = random_complex(rng, amplitude);
        const double shift = 1.5 * b.norm() + 0.5;
        b.diagonal().array() += Complex{shift, 0.0};
        blocks.push_back(std::move(b));
    }
    return unrepresent(Representation(geometry, std::move(blocks)));
}

}  // namespace opcalc
