#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace opcalc {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Default relative tolerance for approximate comparisons.
inline constexpr double kDefaultRelTol = 1e-12;

/// Relative threshold of the rank test: a block counts as singular when the
/// smallest full-pivot LU pivot falls below this fraction of the largest.
inline constexpr double kSingularityThreshold = 1e-10;

/// Hard cap on the axis count; a representation stores 2^N dense blocks.
inline constexpr int kMaxDim = 20;

// ---------------------------------------------------------------------------
// Subsets of the axis set {1,...,N}
// ---------------------------------------------------------------------------

/// A subset of {1,...,N} encoded as a bitmask, axis n on bit n-1.
/// Values order by bitmask, so iterating a std::map keyed by SubsetIndex
/// visits subsets in a fixed deterministic order.
class SubsetIndex {
public:
    constexpr SubsetIndex() = default;
    constexpr explicit SubsetIndex(std::uint32_t bits) : bits_(bits) {}

    static constexpr SubsetIndex empty() { return SubsetIndex{0}; }

    static constexpr SubsetIndex full(int dim) {
        return SubsetIndex{dim <= 0 ? 0u : (std::uint32_t{1} << dim) - 1u};
    }

    static SubsetIndex from_axes(std::span<const int> axes) {
        std::uint32_t bits = 0;
        for (int axis : axes) {
            if (axis < 1 || axis > kMaxDim)
                throw std::out_of_range("SubsetIndex: axis " + std::to_string(axis) +
                                        " outside [1," + std::to_string(kMaxDim) + "]");
            bits |= std::uint32_t{1} << (axis - 1);
        }
        return SubsetIndex{bits};
    }

    static SubsetIndex from_axes(std::initializer_list<int> axes) {
        return from_axes(std::span<const int>(axes.begin(), axes.size()));
    }

    [[nodiscard]] constexpr std::uint32_t bits() const { return bits_; }
    [[nodiscard]] constexpr int cardinality() const { return std::popcount(bits_); }
    [[nodiscard]] constexpr bool is_empty() const { return bits_ == 0; }

    [[nodiscard]] constexpr bool contains_axis(int axis) const {
        return axis >= 1 && axis <= kMaxDim && ((bits_ >> (axis - 1)) & 1u) != 0;
    }

    [[nodiscard]] constexpr bool subset_of(SubsetIndex other) const {
        return (bits_ & ~other.bits_) == 0;
    }

    [[nodiscard]] constexpr SubsetIndex union_with(SubsetIndex other) const {
        return SubsetIndex{bits_ | other.bits_};
    }

    [[nodiscard]] constexpr SubsetIndex intersection_with(SubsetIndex other) const {
        return SubsetIndex{bits_ & other.bits_};
    }

    [[nodiscard]] constexpr SubsetIndex complement_in(int dim) const {
        return SubsetIndex{~bits_ & full(dim).bits()};
    }

    /// Axes in ascending order, 1-based.
    [[nodiscard]] std::vector<int> axes() const {
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(cardinality()));
        for (int n = 1; n <= kMaxDim; ++n)
            if (contains_axis(n)) out.push_back(n);
        return out;
    }

    /// Set notation, e.g. "{}" or "{1,3}".
    [[nodiscard]] std::string to_string() const {
        std::string s = "{";
        bool first = true;
        for (int n : axes()) {
            if (!first) s += ',';
            s += std::to_string(n);
            first = false;
        }
        return s + "}";
    }

    friend constexpr auto operator<=>(SubsetIndex, SubsetIndex) = default;

private:
    std::uint32_t bits_ = 0;
};

/// All subsets of {1,...,dim} in bitmask order.
[[nodiscard]] inline std::vector<SubsetIndex> all_subsets(int dim) {
    std::vector<SubsetIndex> out;
    out.reserve(std::size_t{1} << dim);
    for (std::uint32_t b = 0; b < (std::uint32_t{1} << dim); ++b)
        out.emplace_back(b);
    return out;
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad geometry, shape mismatch, index out of range,
/// schema violation. Distinct from numerical failure.
class ValidationError : public Error {
    using Error::Error;
};

/// Two operands live on different partitions.
class GeometryMismatch : public ValidationError {
    using ValidationError::ValidationError;
};

/// A representation block failed the rank test.
class NotInvertible : public Error {
public:
    NotInvertible(SubsetIndex alpha, double condition_estimate)
        : Error("block " + alpha.to_string() + " is singular to working precision" +
                " (condition estimate " + std::to_string(condition_estimate) + ")"),
          alpha_(alpha), condition_estimate_(condition_estimate) {}

    [[nodiscard]] SubsetIndex alpha() const { return alpha_; }
    [[nodiscard]] double condition_estimate() const { return condition_estimate_; }

private:
    SubsetIndex alpha_;
    double condition_estimate_;
};

/// A scalar function cannot be evaluated on a block's spectrum
/// (pole, branch cut, or defective eigenvalue cluster).
class FunctionUndefinedOnSpectrum : public Error {
public:
    FunctionUndefinedOnSpectrum(SubsetIndex alpha, Complex eigenvalue, const std::string& what)
        : Error("block " + alpha.to_string() + ": " + what + " at eigenvalue (" +
                std::to_string(eigenvalue.real()) + "," + std::to_string(eigenvalue.imag()) + ")"),
          alpha_(alpha), eigenvalue_(eigenvalue) {}

    [[nodiscard]] SubsetIndex alpha() const { return alpha_; }
    [[nodiscard]] Complex eigenvalue() const { return eigenvalue_; }

private:
    SubsetIndex alpha_;
    Complex eigenvalue_;
};

/// Integration along an axis requires the partition to be axis-complete:
/// cells meeting a cell's axis slab must align exactly with it off-axis.
class GeometryNotAxisComplete : public ValidationError {
public:
    GeometryNotAxisComplete(int axis, int cell)
        : ValidationError("partition is not complete along axis " + std::to_string(axis) +
                          " at cell " + std::to_string(cell)),
          axis_(axis), cell_(cell) {}

    [[nodiscard]] int axis() const { return axis_; }
    [[nodiscard]] int cell() const { return cell_; }

private:
    int axis_;
    int cell_;
};

/// A perturbation bound does not converge (delta * ||inverse|| >= 1).
class BoundDiverges : public Error {
    using Error::Error;
};

/// A dense realization would exceed the configured size cap.
class SizeGuardExceeded : public Error {
public:
    SizeGuardExceeded(std::size_t requested, std::size_t limit)
        : Error("dense realization of size " + std::to_string(requested) +
                " exceeds guard " + std::to_string(limit)),
          requested_(requested), limit_(limit) {}

    [[nodiscard]] std::size_t requested() const { return requested_; }
    [[nodiscard]] std::size_t limit() const { return limit_; }

private:
    std::size_t requested_;
    std::size_t limit_;
};

/// An iterative dense solver (Schur, eigenvalue) failed to converge.
class SolverFailure : public Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Partition geometry
// ---------------------------------------------------------------------------

/// A finite family of S pairwise disjoint half-open cubes with common side h,
///     cell i = [a_i(1), a_i(1)+h) x ... x [a_i(N), a_i(N)+h),
/// carrying M-component functions. Disjointness is equivalent to
/// max_m |a_i(m) - a_j(m)| >= h for every pair i != j.
class PartitionGeometry {
public:
    PartitionGeometry(int dim, int components, double cell_size, std::vector<RVector> vertices)
        : dim_(dim), components_(components), cell_size_(cell_size),
          vertices_(std::move(vertices)) {
        if (dim_ < 1 || dim_ > kMaxDim)
            throw ValidationError("geometry: dim must lie in [1," + std::to_string(kMaxDim) + "]");
        if (components_ < 1)
            throw ValidationError("geometry: component count must be positive");
        if (!(cell_size_ > 0.0) || !std::isfinite(cell_size_))
            throw ValidationError("geometry: cell size must be positive and finite");
        if (vertices_.empty())
            throw ValidationError("geometry: at least one cell required");
        for (const RVector& v : vertices_) {
            if (v.size() != dim_)
                throw ValidationError("geometry: vertex dimension mismatch");
            if (!v.allFinite())
                throw ValidationError("geometry: vertex coordinates must be finite");
        }
        check_disjoint();
    }

    /// The uniform partition of [0,1)^N into p^N cubes of side 1/p.
    /// Cell i+1 has vertex (1/p)(b_1,...,b_N) where the b_j are the base-p
    /// digits of i, b_1 least significant.
    static PartitionGeometry uniform_unit_cube(int dim, int subdivisions, int components = 1) {
        if (dim < 1 || dim > kMaxDim)
            throw ValidationError("geometry: dim must lie in [1," + std::to_string(kMaxDim) + "]");
        if (subdivisions < 1)
            throw ValidationError("geometry: subdivisions must be positive");
        double cells_d = std::pow(static_cast<double>(subdivisions), dim);
        if (cells_d > 1e8)
            throw ValidationError("geometry: uniform grid would have too many cells");
        const long cells = static_cast<long>(std::llround(cells_d));
        const double h = 1.0 / subdivisions;
        std::vector<RVector> vertices(static_cast<std::size_t>(cells));
        for (long i = 0; i < cells; ++i) {
            RVector v(dim);
            long rest = i;
            for (int n = 0; n < dim; ++n) {
                v[n] = h * static_cast<double>(rest % subdivisions);
                rest /= subdivisions;
            }
            vertices[static_cast<std::size_t>(i)] = std::move(v);
        }
        return PartitionGeometry(dim, components, h, std::move(vertices));
    }

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] int cells() const { return static_cast<int>(vertices_.size()); }
    [[nodiscard]] int components() const { return components_; }
    [[nodiscard]] double cell_size() const { return cell_size_; }

    /// Rows of the coefficient matrices: M * S.
    [[nodiscard]] int block_size() const { return components_ * cells(); }

    [[nodiscard]] std::size_t subset_count() const { return std::size_t{1} << dim_; }

    /// Vertex of cell i, 1-based.
    [[nodiscard]] const RVector& vertex(int cell) const {
        if (cell < 1 || cell > cells())
            throw ValidationError("geometry: cell index " + std::to_string(cell) +
                                  " outside [1," + std::to_string(cells()) + "]");
        return vertices_[static_cast<std::size_t>(cell - 1)];
    }

    [[nodiscard]] const std::vector<RVector>& vertices() const { return vertices_; }

    /// 1-based index of the cell containing point x, or 0 when none does.
    [[nodiscard]] int locate(const RVector& x) const {
        if (x.size() != dim_)
            throw ValidationError("geometry: point dimension mismatch");
        for (int i = 1; i <= cells(); ++i) {
            const RVector& a = vertices_[static_cast<std::size_t>(i - 1)];
            bool inside = true;
            for (int n = 0; n < dim_ && inside; ++n)
                inside = x[n] >= a[n] && x[n] < a[n] + cell_size_;
            if (inside) return i;
        }
        return 0;
    }

    friend bool operator==(const PartitionGeometry& a, const PartitionGeometry& b) {
        if (a.dim_ != b.dim_ || a.components_ != b.components_ ||
            a.cell_size_ != b.cell_size_ || a.vertices_.size() != b.vertices_.size())
            return false;
        for (std::size_t i = 0; i < a.vertices_.size(); ++i)
            if (a.vertices_[i] != b.vertices_[i]) return false;
        return true;
    }

private:
    void check_disjoint() const {
        // Tolerate one part in 1e12 of rounding in vertices built as h*k.
        const double floor = cell_size_ * (1.0 - 1e-12);
        for (std::size_t i = 0; i < vertices_.size(); ++i) {
            for (std::size_t j = i + 1; j < vertices_.size(); ++j) {
                double sep = (vertices_[i] - vertices_[j]).cwiseAbs().maxCoeff();
                if (sep < floor)
                    throw ValidationError("geometry: cells " + std::to_string(i + 1) + " and " +
                                          std::to_string(j + 1) + " overlap");
            }
        }
    }

    int dim_;
    int components_;
    double cell_size_;
    std::vector<RVector> vertices_;
};

namespace detail {

/// q^k for small non-negative k, as a long.
[[nodiscard]] inline long ipow(int q, int k) {
    long r = 1;
    for (int m = 0; m < k; ++m) r *= q;
    return r;
}

}  // namespace detail

}  // namespace opcalc
