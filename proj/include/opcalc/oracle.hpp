#pragma once

#include <algorithm>
#include <cstdlib>
#include <future>
#include <thread>
#include <vector>

#include "opcalc/element.hpp"

namespace opcalc {

// ---------------------------------------------------------------------------
// Dense realization
// ---------------------------------------------------------------------------

/// Exact matrix form of an element on the q-refined grid, in
/// RefinedGridFunction ordering. Brute force on purpose: this is the
/// independent check the rest of the library is measured against.
struct DenseRealization {
    PartitionGeometry geometry;
    int refinement = 1;
    CMatrix matrix;
};

/// Size cap for dense realizations; override with env OPCALC_MAX_DENSE.
[[nodiscard]] inline std::size_t default_dense_guard() {
    if (const char* env = std::getenv("OPCALC_MAX_DENSE")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return 4096;
}

/// Dense matrix of the element at refinement q: column j is apply(X, e_j).
/// Exact, since piecewise-constant kernels act exactly on the refined grid.
[[nodiscard]] inline DenseRealization dense_matrix(const AlgebraElement& x, int q,
                                                   std::size_t size_guard = 0) {
    if (q < 1) throw ValidationError("dense_matrix: refinement must be positive");
    const PartitionGeometry& g = x.geometry();
    const std::size_t side = static_cast<std::size_t>(g.block_size()) *
                             static_cast<std::size_t>(detail::ipow(q, g.dim()));
    const std::size_t guard = size_guard > 0 ? size_guard : default_dense_guard();
    if (side > guard) throw SizeGuardExceeded(side, guard);

    CMatrix mat(side, side);
    auto fill_columns = [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            CVector e = CVector::Zero(static_cast<long>(side));
            e[static_cast<long>(j)] = Complex{1.0, 0.0};
            RefinedGridFunction out = apply(x, RefinedGridFunction(g, q, std::move(e)));
            mat.col(static_cast<long>(j)) = out.values();
        }
    };
    if (side >= 512) {
        const std::size_t workers =
            std::max<std::size_t>(1, std::thread::hardware_concurrency());
        const std::size_t chunk = (side + workers - 1) / workers;
        std::vector<std::future<void>> futures;
        for (std::size_t begin = 0; begin < side; begin += chunk)
            futures.push_back(std::async(std::launch::async, fill_columns, begin,
                                         std::min(begin + chunk, side)));
        for (auto& f : futures) f.get();
    } else {
        fill_columns(0, side);
    }
    return DenseRealization{g, q, std::move(mat)};
}

// ---------------------------------------------------------------------------
// Idempotent projectors
// ---------------------------------------------------------------------------

/// Orthogonal projector onto functions that are, within each cell, constant
/// along the alpha-axes and mean-zero along every axis outside alpha.
/// Per cell and component it is the tensor product of the averaging matrix
/// (axes in alpha) and its complement (axes outside), entrywise
///     prod_{n in alpha} 1/q * prod_{n not in alpha} (delta - 1/q).
/// These projectors resolve the identity and are mutually orthogonal.
[[nodiscard]] inline DenseRealization projector(const PartitionGeometry& geometry,
                                                SubsetIndex alpha, int q,
                                                std::size_t size_guard = 0) {
    if (q < 1) throw ValidationError("projector: refinement must be positive");
    if (alpha.bits() >= geometry.subset_count())
        throw ValidationError("projector: subset " + alpha.to_string() +
                              " exceeds geometry dimension");
    const int dim = geometry.dim();
    const int m = geometry.components();
    const long qn = detail::ipow(q, dim);
    const std::size_t side = static_cast<std::size_t>(geometry.block_size()) *
                             static_cast<std::size_t>(qn);
    const std::size_t guard = size_guard > 0 ? size_guard : default_dense_guard();
    if (side > guard) throw SizeGuardExceeded(side, guard);

    CMatrix mat = CMatrix::Zero(side, side);
    const double inv_q = 1.0 / q;
    for (int cell = 0; cell < geometry.cells(); ++cell) {
        for (long t = 0; t < qn; ++t) {
            for (long s = 0; s < qn; ++s) {
                double w = 1.0;
                for (int axis = 1; axis <= dim && w != 0.0; ++axis) {
                    const int td = detail::subcell_digit(t, axis, dim, q);
                    const int sd = detail::subcell_digit(s, axis, dim, q);
                    if (alpha.contains_axis(axis))
                        w *= inv_q;
                    else
                        w *= (td == sd ? 1.0 : 0.0) - inv_q;
                }
                if (w == 0.0) continue;
                for (int c = 0; c < m; ++c) {
                    const long row = (static_cast<long>(cell) * qn + t) * m + c;
                    const long col = (static_cast<long>(cell) * qn + s) * m + c;
                    mat(row, col) = Complex{w, 0.0};
                }
            }
        }
    }
    return DenseRealization{geometry, q, std::move(mat)};
}

// ---------------------------------------------------------------------------
// Oracle spectrum and norm
// ---------------------------------------------------------------------------

/// Eigenvalues of the dense realization, sorted by (real, imag).
/// At q=2 this multiset equals the disjoint union over alpha of the block
/// eigenvalues; at general q each block eigenvalue appears with multiplicity
/// (q-1)^(N-|alpha|) per cell subspace.
[[nodiscard]] inline std::vector<Complex> oracle_spectrum(const AlgebraElement& x, int q = 2,
                                                          std::size_t size_guard = 0) {
    const DenseRealization dense = dense_matrix(x, q, size_guard);
    Eigen::ComplexEigenSolver<CMatrix> es(dense.matrix, false);
    if (es.info() != Eigen::Success)
        throw SolverFailure("dense eigenvalue iteration failed to converge");
    std::vector<Complex> evs(static_cast<std::size_t>(dense.matrix.rows()));
    for (long i = 0; i < dense.matrix.rows(); ++i) evs[static_cast<std::size_t>(i)] = es.eigenvalues()[i];
    std::sort(evs.begin(), evs.end(), [](Complex a, Complex b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return evs;
}

/// Spectral norm of the dense realization. At q=2 equals operator_norm.
[[nodiscard]] inline double oracle_norm(const AlgebraElement& x, int q = 2,
                                        std::size_t size_guard = 0) {
    const DenseRealization dense = dense_matrix(x, q, size_guard);
    Eigen::BDCSVD<CMatrix> svd(dense.matrix);
    return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

// ---------------------------------------------------------------------------
// Multiset comparison
// ---------------------------------------------------------------------------

namespace detail {

inline bool kuhn_augment(int i, const std::vector<std::vector<int>>& adj,
                         std::vector<int>& match_of_b, std::vector<char>& used) {
    for (int j : adj[static_cast<std::size_t>(i)]) {
        if (used[static_cast<std::size_t>(j)]) continue;
        used[static_cast<std::size_t>(j)] = 1;
        if (match_of_b[static_cast<std::size_t>(j)] < 0 ||
            kuhn_augment(match_of_b[static_cast<std::size_t>(j)], adj, match_of_b, used)) {
            match_of_b[static_cast<std::size_t>(j)] = i;
            return true;
        }
    }
    return false;
}

}  // namespace detail

/// True when the two eigenvalue multisets admit a perfect matching with all
/// matched pairs within tol. Optimal (augmenting-path) matching: greedy
/// pairing fails on clustered values.
[[nodiscard]] inline bool eigenvalue_multisets_match(const std::vector<Complex>& a,
                                                     const std::vector<Complex>& b, double tol) {
    if (a.size() != b.size()) return false;
    const int n = static_cast<int>(a.size());
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (std::abs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(j)]) <= tol)
                adj[static_cast<std::size_t>(i)].push_back(j);
    std::vector<int> match_of_b(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
        std::vector<char> used(static_cast<std::size_t>(n), 0);
        if (!detail::kuhn_augment(i, adj, match_of_b, used)) return false;
    }
    return true;
}

/// Block eigenvalues of every subset, concatenated: the q=2 oracle target.
[[nodiscard]] inline std::vector<Complex> block_spectrum_multiset(const AlgebraElement& x) {
    const Representation rep = represent(x);
    std::vector<Complex> all;
    for (const CMatrix& b : rep.blocks()) {
        Eigen::ComplexEigenSolver<CMatrix> es(b, false);
        if (es.info() != Eigen::Success)
            throw SolverFailure("block eigenvalue iteration failed to converge");
        for (long i = 0; i < b.rows(); ++i) all.push_back(es.eigenvalues()[i]);
    }
    return all;
}

}  // namespace opcalc
