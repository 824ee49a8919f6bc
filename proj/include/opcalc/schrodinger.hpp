#pragma once

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "opcalc/calculus.hpp"
#include "opcalc/element.hpp"

namespace opcalc {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Discretized 3D wave problem with three orthogonal planar potential
/// defects: frequency lambda, attenuation epsilon > 0, defect strengths
/// V = (V1, V2, V3), and p subdivisions per axis (cell size h = 1/p).
struct SchrodingerConfig {
    double lambda = 0.0;
    double epsilon = 1.0;
    std::array<double, 3> potential{0.0, 0.0, 0.0};
    int p = 2;
    /// p > 8 builds 8 blocks beyond 512x512; opt in explicitly.
    bool allow_large = false;
};

namespace detail {

inline void validate_config(const SchrodingerConfig& cfg) {
    if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon))
        throw ValidationError("config: epsilon must be positive and finite");
    if (!std::isfinite(cfg.lambda))
        throw ValidationError("config: lambda must be finite");
    for (double v : cfg.potential)
        if (!std::isfinite(v)) throw ValidationError("config: potential must be finite");
    if (cfg.p < 1) throw ValidationError("config: p must be positive");
    if (cfg.p > 8 && !cfg.allow_large)
        throw ValidationError("config: p > 8 requires allow_large");
}

}  // namespace detail

/// The symbol of the free operator: -i*epsilon + lambda - 4 sum sin^2(pi k_i).
[[nodiscard]] inline Complex schrodinger_symbol(const SchrodingerConfig& cfg,
                                                const Eigen::Vector3d& k) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double t = std::sin(std::numbers::pi * k[i]);
        s += t * t;
    }
    return Complex{cfg.lambda - 4.0 * s, -cfg.epsilon};
}

// ---------------------------------------------------------------------------
// Operator assembly
// ---------------------------------------------------------------------------

/// The discretized operator on the uniform p-grid of [0,1)^3: multiplication
/// by the cell-center symbol plus, per axis i, an integration term of
/// strength -h*V_i coupling cells with equal off-axis coordinates.
[[nodiscard]] inline AlgebraElement build_operator(const SchrodingerConfig& cfg) {
    detail::validate_config(cfg);
    const PartitionGeometry geometry = PartitionGeometry::uniform_unit_cube(3, cfg.p, 1);
    const int s = geometry.cells();
    const double h = geometry.cell_size();

    AlgebraElement::CoefficientMap coeffs;
    {
        CMatrix diag = CMatrix::Zero(s, s);
        Eigen::Vector3d center;
        for (int i = 1; i <= s; ++i) {
            const RVector& a = geometry.vertex(i);
            for (int n = 0; n < 3; ++n) center[n] = a[n] + h / 2.0;
            diag(i - 1, i - 1) = schrodinger_symbol(cfg, center);
        }
        coeffs.emplace(SubsetIndex::empty(), std::move(diag));
    }
    const double align_tol = 1e-12 * h;
    for (int axis = 1; axis <= 3; ++axis) {
        const double v = cfg.potential[static_cast<std::size_t>(axis - 1)];
        if (v == 0.0) continue;
        CMatrix mat = CMatrix::Zero(s, s);
        for (int i = 1; i <= s; ++i) {
            const RVector& ai = geometry.vertex(i);
            for (int j = 1; j <= s; ++j) {
                const RVector& aj = geometry.vertex(j);
                bool matched = true;
                for (int n = 1; n <= 3 && matched; ++n)
                    if (n != axis) matched = std::abs(ai[n - 1] - aj[n - 1]) <= align_tol;
                if (matched) mat(i - 1, j - 1) = Complex{-h * v, 0.0};
            }
        }
        coeffs.emplace(SubsetIndex::from_axes({axis}), std::move(mat));
    }
    return AlgebraElement(geometry, std::move(coeffs));
}

// ---------------------------------------------------------------------------
// Wave solution
// ---------------------------------------------------------------------------

/// The solved wave function: the eight alternating-sum matrices C_alpha, the
/// per-cell values of the (piecewise-constant) solution, and the a-priori
/// bound 24*pi*h/epsilon^2 against the continuum solution.
struct WaveSolution {
    SchrodingerConfig config;
    PartitionGeometry geometry;
    std::map<SubsetIndex, CMatrix> C;
    CVector cell_values;
    double bound_state_error = 0.0;

    /// Value at a point of [0,1)^3; the solution is constant per cell.
    [[nodiscard]] Complex evaluate(const Eigen::Vector3d& k) const {
        long idx = 0;
        long stride = 1;
        for (int n = 0; n < 3; ++n) {
            if (k[n] < 0.0 || k[n] >= 1.0)
                throw ValidationError("evaluate: point outside [0,1)^3");
            long digit = static_cast<long>(std::floor(k[n] * config.p));
            digit = std::min<long>(digit, config.p - 1);
            idx += digit * stride;
            stride *= config.p;
        }
        return cell_values[idx];
    }
};

/// Solve for the wave function: invert the eight representation blocks
/// concurrently, combine them by the alternating-sum rule (the subset-lattice
/// Moebius inversion of the inverses), and collapse onto per-cell values.
[[nodiscard]] inline WaveSolution solve_wavefunction(const SchrodingerConfig& cfg) {
    detail::validate_config(cfg);
    const AlgebraElement op = build_operator(cfg);
    const Representation rep = represent(op);
    const std::vector<CMatrix> inv = detail::map_blocks(
        rep.blocks(), [](const CMatrix& b, SubsetIndex alpha) { return block_inverse(b, alpha); });

    // Alternating sums over the subset lattice: the empty set takes its own
    // inverse; every other subset alternates by the size of the complement
    // within it, e.g. C_{1,2} = B_{1,2}^-1 - B_{1}^-1 - B_{2}^-1 + B_{}^-1.
    const PartitionGeometry& g = op.geometry();
    const int s = g.cells();
    std::map<SubsetIndex, CMatrix> c;
    for (std::uint32_t mask = 0; mask < 8; ++mask) {
        CMatrix acc = CMatrix::Zero(s, s);
        for (std::uint32_t sub = mask;; sub = (sub - 1) & mask) {
            const int sign_card = std::popcount(mask ^ sub);
            if (sign_card % 2 == 0)
                acc += inv[sub];
            else
                acc -= inv[sub];
            if (sub == 0) break;
        }
        c.emplace(SubsetIndex{mask}, std::move(acc));
    }

    // Per-cell solution values: row sums of each C_alpha restricted to the
    // cells sharing off-alpha digits, the closed form of the chi-integrals.
    const double h = g.cell_size();
    const double align_tol = 1e-12 * h;
    CVector values = CVector::Zero(s);
    for (const auto& [alpha, mat] : c) {
        for (int i = 1; i <= s; ++i) {
            const RVector& ai = g.vertex(i);
            Complex acc{0.0, 0.0};
            for (int j = 1; j <= s; ++j) {
                const RVector& aj = g.vertex(j);
                bool matched = true;
                for (int n = 1; n <= 3 && matched; ++n)
                    if (!alpha.contains_axis(n))
                        matched = std::abs(ai[n - 1] - aj[n - 1]) <= align_tol;
                if (matched) acc += mat(i - 1, j - 1);
            }
            values[i - 1] += acc;
        }
    }

    return WaveSolution{cfg, g, std::move(c), std::move(values),
                        24.0 * std::numbers::pi * h / (cfg.epsilon * cfg.epsilon)};
}

/// The solution as a refined grid function (constant across subcells).
[[nodiscard]] inline RefinedGridFunction wave_as_grid_function(const WaveSolution& sol,
                                                               int refinement) {
    const long qn = detail::ipow(refinement, 3);
    const long s = sol.geometry.cells();
    CVector values(s * qn);
    for (long cell = 0; cell < s; ++cell)
        for (long t = 0; t < qn; ++t) values[cell * qn + t] = sol.cell_values[cell];
    return RefinedGridFunction(sol.geometry, refinement, std::move(values));
}

/// L2 norm of the piecewise-constant solution over [0,1)^3.
[[nodiscard]] inline double wave_l2_norm(const WaveSolution& sol) {
    const double vol = std::pow(sol.geometry.cell_size(), 3);
    return std::sqrt(sol.cell_values.squaredNorm() * vol);
}

/// Exact L2 distance between two solutions whose grids are nested
/// (p_b a multiple of p_a): integrate the squared difference piecewise on the
/// finer grid. No quadrature error: both are piecewise constant.
[[nodiscard]] inline double wave_l2_difference(const WaveSolution& a, const WaveSolution& b) {
    const WaveSolution& coarse = a.config.p <= b.config.p ? a : b;
    const WaveSolution& fine = a.config.p <= b.config.p ? b : a;
    if (fine.config.p % coarse.config.p != 0)
        throw ValidationError("wave_l2_difference: grids are not nested");
    const int factor = fine.config.p / coarse.config.p;
    const int pf = fine.config.p;
    const double vol = std::pow(fine.geometry.cell_size(), 3);
    double sum = 0.0;
    for (long idx = 0; idx < fine.geometry.cells(); ++idx) {
        long rest = idx;
        long coarse_idx = 0;
        long stride = 1;
        for (int n = 0; n < 3; ++n) {
            const long digit = rest % pf;
            rest /= pf;
            coarse_idx += (digit / factor) * stride;
            stride *= coarse.config.p;
        }
        sum += std::norm(fine.cell_values[idx] - coarse.cell_values[coarse_idx]);
    }
    return std::sqrt(sum * vol);
}

/// Fourier coefficient of the piecewise-constant solution at integer
/// frequency n: a product of closed-form interval integrals per axis.
[[nodiscard]] inline Complex fourier_coefficient(const WaveSolution& sol,
                                                 const std::array<long, 3>& n) {
    const double h = sol.geometry.cell_size();
    Complex sum{0.0, 0.0};
    for (int cell = 1; cell <= sol.geometry.cells(); ++cell) {
        const RVector& a = sol.geometry.vertex(cell);
        Complex factor{1.0, 0.0};
        for (int d = 0; d < 3; ++d) {
            if (n[static_cast<std::size_t>(d)] == 0) {
                factor *= h;
                continue;
            }
            const double w = -2.0 * std::numbers::pi * static_cast<double>(n[static_cast<std::size_t>(d)]);
            const Complex i_w{0.0, w};
            // integral of e^{i w k} over [a_d, a_d + h)
            factor *= (std::exp(i_w * (a[d] + h)) - std::exp(i_w * a[d])) / i_w;
        }
        sum += sol.cell_values[cell - 1] * factor;
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Spectrum layers and error bounds
// ---------------------------------------------------------------------------

/// Name of the spectral layer for a subset cardinality: defects of dimension
/// 3 - |alpha| confine waves to volume, planar, guided, or local modes.
[[nodiscard]] inline const char* spectral_layer_name(int cardinality) {
    switch (cardinality) {
        case 0: return "volume";
        case 1: return "planar";
        case 2: return "guided";
        case 3: return "local";
        default: return "unknown";
    }
}

/// Spectrum of the discretized operator; layer keys classify by defect
/// dimension (see spectral_layer_name).
[[nodiscard]] inline SpectrumReport classify_spectrum(const SchrodingerConfig& cfg,
                                                      double dedup_tol = 0.0) {
    return spectrum(build_operator(cfg), dedup_tol);
}

/// A-priori gaps of the discretization against the continuum problem:
/// operator and spectral gaps 24*pi*h, wave-function gap 24*pi*h/eps^2.
struct SchrodingerErrorReport {
    double operator_gap = 0.0;
    double wavefunction_gap = 0.0;
    double spectral_gap = 0.0;
};

[[nodiscard]] inline SchrodingerErrorReport error_report(const SchrodingerConfig& cfg) {
    detail::validate_config(cfg);
    const double h = 1.0 / cfg.p;
    SchrodingerErrorReport r;
    r.operator_gap = 24.0 * std::numbers::pi * h;
    r.wavefunction_gap = 24.0 * std::numbers::pi * h / (cfg.epsilon * cfg.epsilon);
    r.spectral_gap = 24.0 * std::numbers::pi * h;
    return r;
}

}  // namespace opcalc
