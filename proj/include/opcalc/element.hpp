#pragma once

#include <map>
#include <utility>
#include <vector>

#include "opcalc/core.hpp"

namespace opcalc {

// ---------------------------------------------------------------------------
// AlgebraElement
// ---------------------------------------------------------------------------

/// An operator written as a finite sum of elementary terms, stored as a sparse
/// map from axis subsets alpha to (M*S)x(M*S) coefficient matrices A_alpha.
/// Block (i,j) of A_alpha scales the term that averages the input over the
/// alpha-axes of cell j and writes the result onto cell i.
///
/// Elements are immutable values; all operations return new elements.
class AlgebraElement {
public:
    using CoefficientMap = std::map<SubsetIndex, CMatrix>;

    AlgebraElement(PartitionGeometry geometry, CoefficientMap coefficients)
        : geometry_(std::move(geometry)) {
        const int ms = geometry_.block_size();
        for (auto& [alpha, mat] : coefficients) {
            if (alpha.bits() >= geometry_.subset_count())
                throw ValidationError("element: subset " + alpha.to_string() +
                                      " exceeds geometry dimension");
            if (mat.rows() != ms || mat.cols() != ms)
                throw ValidationError("element: coefficient " + alpha.to_string() +
                                      " must be " + std::to_string(ms) + "x" + std::to_string(ms));
            if (!mat.allFinite())
                throw ValidationError("element: coefficient " + alpha.to_string() +
                                      " has non-finite entries");
            if (!mat.isZero(0.0))
                coefficients_.emplace(alpha, std::move(mat));
        }
    }

    [[nodiscard]] const PartitionGeometry& geometry() const { return geometry_; }
    [[nodiscard]] const CoefficientMap& coefficients() const { return coefficients_; }

    [[nodiscard]] bool has_coefficient(SubsetIndex alpha) const {
        return coefficients_.contains(alpha);
    }

    /// Coefficient matrix for alpha; zero when absent.
    [[nodiscard]] CMatrix coefficient(SubsetIndex alpha) const {
        auto it = coefficients_.find(alpha);
        if (it != coefficients_.end()) return it->second;
        const int ms = geometry_.block_size();
        return CMatrix::Zero(ms, ms);
    }

    [[nodiscard]] bool is_zero() const { return coefficients_.empty(); }

private:
    PartitionGeometry geometry_;
    CoefficientMap coefficients_;
};

/// Zero element.
[[nodiscard]] inline AlgebraElement zero_element(const PartitionGeometry& geometry) {
    return AlgebraElement(geometry, {});
}

/// Multiplicative identity: the empty-subset coefficient is the identity matrix.
[[nodiscard]] inline AlgebraElement identity_element(const PartitionGeometry& geometry) {
    AlgebraElement::CoefficientMap coeffs;
    const int ms = geometry.block_size();
    coeffs.emplace(SubsetIndex::empty(), CMatrix::Identity(ms, ms));
    return AlgebraElement(geometry, coeffs);
}

/// A single elementary term: average over the alpha-axes of cell j, scale the
/// component vector by the MxM matrix `weight`, write onto cell i.
/// Cells are 1-based.
[[nodiscard]] inline AlgebraElement make_elementary(const PartitionGeometry& geometry, int i,
                                                    int j, SubsetIndex alpha,
                                                    const CMatrix& weight) {
    const int s = geometry.cells();
    const int m = geometry.components();
    if (i < 1 || i > s || j < 1 || j > s)
        throw ValidationError("make_elementary: cell index outside [1," + std::to_string(s) + "]");
    if (alpha.bits() >= geometry.subset_count())
        throw ValidationError("make_elementary: subset " + alpha.to_string() +
                              " exceeds geometry dimension");
    if (weight.rows() != m || weight.cols() != m)
        throw ValidationError("make_elementary: weight must be " + std::to_string(m) + "x" +
                              std::to_string(m));
    if (!weight.allFinite())
        throw ValidationError("make_elementary: weight has non-finite entries");
    CMatrix mat = CMatrix::Zero(geometry.block_size(), geometry.block_size());
    mat.block((i - 1) * m, (j - 1) * m, m, m) = weight;
    AlgebraElement::CoefficientMap coeffs;
    coeffs.emplace(alpha, std::move(mat));
    return AlgebraElement(geometry, coeffs);
}

[[nodiscard]] inline AlgebraElement add(const AlgebraElement& x, const AlgebraElement& y) {
    if (!(x.geometry() == y.geometry()))
        throw GeometryMismatch("add: operands live on different partitions");
    AlgebraElement::CoefficientMap coeffs = x.coefficients();
    for (const auto& [alpha, mat] : y.coefficients()) {
        auto [it, inserted] = coeffs.try_emplace(alpha, mat);
        if (!inserted) it->second += mat;
    }
    return AlgebraElement(x.geometry(), std::move(coeffs));
}

[[nodiscard]] inline AlgebraElement scale(Complex c, const AlgebraElement& x) {
    AlgebraElement::CoefficientMap coeffs;
    for (const auto& [alpha, mat] : x.coefficients()) coeffs.emplace(alpha, c * mat);
    return AlgebraElement(x.geometry(), std::move(coeffs));
}

[[nodiscard]] inline AlgebraElement subtract(const AlgebraElement& x, const AlgebraElement& y) {
    return add(x, scale(Complex{-1.0, 0.0}, y));
}

/// Hermitian adjoint: each coefficient matrix conjugate-transposes in place
/// (averaging direction and write target swap roles within the same subset).
[[nodiscard]] inline AlgebraElement adjoint(const AlgebraElement& x) {
    AlgebraElement::CoefficientMap coeffs;
    for (const auto& [alpha, mat] : x.coefficients()) coeffs.emplace(alpha, mat.adjoint().eval());
    return AlgebraElement(x.geometry(), coeffs);
}

/// Product rule: terms compose subset-wise, (alpha,A)*(beta,B) -> (alpha|beta, A*B).
[[nodiscard]] inline AlgebraElement multiply(const AlgebraElement& x, const AlgebraElement& y) {
    if (!(x.geometry() == y.geometry()))
        throw GeometryMismatch("multiply: operands live on different partitions");
    AlgebraElement::CoefficientMap coeffs;
    for (const auto& [alpha, a] : x.coefficients()) {
        for (const auto& [beta, b] : y.coefficients()) {
            const SubsetIndex key = alpha.union_with(beta);
            CMatrix prod = a * b;
            auto [it, inserted] = coeffs.try_emplace(key, std::move(prod));
            if (!inserted) it->second += prod;
        }
    }
    return AlgebraElement(x.geometry(), std::move(coeffs));
}

// ---------------------------------------------------------------------------
// Representation
// ---------------------------------------------------------------------------

/// The image of an element under the block isomorphism: one (M*S)x(M*S)
/// matrix per subset, B_alpha = sum of A_beta over beta a subset of alpha.
/// Algebra operations act blockwise on this form.
class Representation {
public:
    Representation(PartitionGeometry geometry, std::vector<CMatrix> blocks)
        : geometry_(std::move(geometry)), blocks_(std::move(blocks)) {
        if (blocks_.size() != geometry_.subset_count())
            throw ValidationError("representation: expected " +
                                  std::to_string(geometry_.subset_count()) + " blocks");
        const int ms = geometry_.block_size();
        for (const CMatrix& b : blocks_) {
            if (b.rows() != ms || b.cols() != ms)
                throw ValidationError("representation: block shape mismatch");
            if (!b.allFinite())
                throw ValidationError("representation: block has non-finite entries");
        }
    }

    [[nodiscard]] const PartitionGeometry& geometry() const { return geometry_; }
    [[nodiscard]] const std::vector<CMatrix>& blocks() const { return blocks_; }

    [[nodiscard]] const CMatrix& block(SubsetIndex alpha) const {
        if (alpha.bits() >= blocks_.size())
            throw ValidationError("representation: subset " + alpha.to_string() + " out of range");
        return blocks_[alpha.bits()];
    }

private:
    PartitionGeometry geometry_;
    std::vector<CMatrix> blocks_;
};

/// Subset-sum (zeta) transform of the coefficients, in place over the lattice:
/// B_alpha = sum_{beta subset of alpha} A_beta. O(2^N) block additions.
[[nodiscard]] inline Representation represent(const AlgebraElement& x) {
    const PartitionGeometry& g = x.geometry();
    const int ms = g.block_size();
    std::vector<CMatrix> blocks(g.subset_count(), CMatrix::Zero(ms, ms));
    for (const auto& [alpha, mat] : x.coefficients()) blocks[alpha.bits()] = mat;
    for (int b = 0; b < g.dim(); ++b) {
        const std::uint32_t bit = std::uint32_t{1} << b;
        for (std::uint32_t mask = 0; mask < blocks.size(); ++mask)
            if (mask & bit) blocks[mask] += blocks[mask ^ bit];
    }
    return Representation(g, std::move(blocks));
}

/// Inverse (Moebius) transform: A_alpha = sum_{beta subset of alpha}
/// (-1)^{|alpha \ beta|} B_beta. Exact inverse of represent on the nose.
[[nodiscard]] inline AlgebraElement unrepresent(const Representation& r) {
    std::vector<CMatrix> blocks = r.blocks();
    const int dim = r.geometry().dim();
    for (int b = 0; b < dim; ++b) {
        const std::uint32_t bit = std::uint32_t{1} << b;
        for (std::uint32_t mask = 0; mask < blocks.size(); ++mask)
            if (mask & bit) blocks[mask] -= blocks[mask ^ bit];
    }
    AlgebraElement::CoefficientMap coeffs;
    for (std::uint32_t mask = 0; mask < blocks.size(); ++mask)
        coeffs.emplace(SubsetIndex{mask}, std::move(blocks[mask]));
    return AlgebraElement(r.geometry(), std::move(coeffs));
}

// ---------------------------------------------------------------------------
// RefinedGridFunction
// ---------------------------------------------------------------------------

/// A piecewise-constant M-component function on the partition refined q-fold
/// along every axis. Values are stored cell-major, then subcell (lexicographic
/// in the per-axis offsets, axis 1 most significant), component last.
class RefinedGridFunction {
public:
    RefinedGridFunction(PartitionGeometry geometry, int refinement, CVector values)
        : geometry_(std::move(geometry)), refinement_(refinement), values_(std::move(values)) {
        if (refinement_ < 1) throw ValidationError("grid function: refinement must be positive");
        const long expected = static_cast<long>(geometry_.cells()) *
                              detail::ipow(refinement_, geometry_.dim()) * geometry_.components();
        if (values_.size() != expected)
            throw ValidationError("grid function: expected " + std::to_string(expected) +
                                  " values, got " + std::to_string(values_.size()));
        if (!values_.allFinite())
            throw ValidationError("grid function: non-finite values");
    }

    static RefinedGridFunction constant(const PartitionGeometry& geometry, int refinement,
                                        Complex value) {
        const long n = static_cast<long>(geometry.cells()) *
                       detail::ipow(refinement, geometry.dim()) * geometry.components();
        return RefinedGridFunction(geometry, refinement, CVector::Constant(n, value));
    }

    [[nodiscard]] const PartitionGeometry& geometry() const { return geometry_; }
    [[nodiscard]] int refinement() const { return refinement_; }
    [[nodiscard]] const CVector& values() const { return values_; }
    [[nodiscard]] long subcells_per_cell() const {
        return detail::ipow(refinement_, geometry_.dim());
    }

    /// Flat storage index; cell and component are 1-based, subcell 0-based.
    [[nodiscard]] long index(int cell, long subcell, int component) const {
        const long qn = subcells_per_cell();
        if (cell < 1 || cell > geometry_.cells() || subcell < 0 || subcell >= qn ||
            component < 1 || component > geometry_.components())
            throw ValidationError("grid function: index out of range");
        return (static_cast<long>(cell - 1) * qn + subcell) * geometry_.components() +
               (component - 1);
    }

    [[nodiscard]] Complex value(int cell, long subcell, int component) const {
        return values_[index(cell, subcell, component)];
    }

    /// L2 norm over the union of cells; each subcell has volume (h/q)^N.
    [[nodiscard]] double l2_norm() const {
        const double vol = std::pow(geometry_.cell_size() / refinement_, geometry_.dim());
        return std::sqrt(values_.squaredNorm() * vol);
    }

private:
    PartitionGeometry geometry_;
    int refinement_;
    CVector values_;
};

namespace detail {

/// Subcell digit along a 1-based axis: axis 1 is the most significant digit.
[[nodiscard]] inline int subcell_digit(long subcell, int axis, int dim, int q) {
    return static_cast<int>((subcell / ipow(q, dim - axis)) % q);
}

}  // namespace detail

/// Apply the operator to a refined grid function. Each term (alpha, A_alpha)
/// averages the input over the alpha-axes of each cell and applies A_alpha
/// across the cell/component index; the result is constant along the
/// alpha-axes of each target cell. Exact on this function space.
[[nodiscard]] inline RefinedGridFunction apply(const AlgebraElement& x,
                                               const RefinedGridFunction& u) {
    if (!(x.geometry() == u.geometry()))
        throw GeometryMismatch("apply: operand partitions differ");
    const PartitionGeometry& g = x.geometry();
    const int dim = g.dim();
    const int s = g.cells();
    const int m = g.components();
    const int ms = g.block_size();
    const int q = u.refinement();
    const long qn = u.subcells_per_cell();

    CVector out = CVector::Zero(u.values().size());
    CVector ubar(ms), y(ms);

    for (const auto& [alpha, a] : x.coefficients()) {
        // Subcell offsets that vary exactly the alpha-axis digits.
        std::vector<long> offsets{0};
        for (int axis : alpha.axes()) {
            const long stride = detail::ipow(q, dim - axis);
            std::vector<long> next;
            next.reserve(offsets.size() * static_cast<std::size_t>(q));
            for (long base : offsets)
                for (int v = 0; v < q; ++v) next.push_back(base + v * stride);
            offsets = std::move(next);
        }
        const double inv = 1.0 / static_cast<double>(offsets.size());

        for (long base = 0; base < qn; ++base) {
            bool canonical = true;
            for (int axis : alpha.axes())
                if (detail::subcell_digit(base, axis, dim, q) != 0) {
                    canonical = false;
                    break;
                }
            if (!canonical) continue;

            for (int j = 0; j < s; ++j) {
                for (int c = 0; c < m; ++c) {
                    Complex acc{0.0, 0.0};
                    for (long d : offsets)
                        acc += u.values()[(static_cast<long>(j) * qn + base + d) * m + c];
                    ubar[j * m + c] = acc * inv;
                }
            }
            y.noalias() = a * ubar;
            for (long d : offsets) {
                for (int i = 0; i < s; ++i)
                    for (int c = 0; c < m; ++c)
                        out[(static_cast<long>(i) * qn + base + d) * m + c] += y[i * m + c];
            }
        }
    }
    return RefinedGridFunction(g, q, std::move(out));
}

}  // namespace opcalc
