// Dense-oracle module: the brute-force realization every other module is
// checked against, so its own tests lean on hand-computed matrices.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>

#include "test_helpers.hpp"

using namespace opcalc;
using opcalc::testing::m1;

TEST_CASE("dense realization of the identity is the identity matrix") {
    for (int q : {1, 2, 3}) {
        const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(2, 2, 1);
        const DenseRealization d = dense_matrix(identity_element(g), q);
        const long side = g.block_size() * detail::ipow(q, g.dim());
        REQUIRE(d.matrix.rows() == side);
        REQUIRE((d.matrix - CMatrix::Identity(side, side)).norm() == 0.0);
    }
}

TEST_CASE("dense realization of the unit averaging term") {
    // One cell, one axis: averaging at q=2 is the rank-one matrix
    // (1/2) [[1,1],[1,1]].
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(1, 1, 1);
    const AlgebraElement e = make_elementary(g, 1, 1, SubsetIndex::from_axes({1}), m1(1.0));
    const DenseRealization d = dense_matrix(e, 2);
    CMatrix expected(2, 2);
    expected << 0.5, 0.5, 0.5, 0.5;
    REQUIRE((d.matrix - expected).norm() <= 1e-15);
}

TEST_CASE("dense realization is an algebra homomorphism") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 8; ++trial) {
        const PartitionGeometry g = random_geometry(rng, 2, 2, 1);
        const AlgebraElement x = testing::nonzero_random_element(rng, g);
        const AlgebraElement y = testing::nonzero_random_element(rng, g);
        for (int q : {2, 3}) {
            const CMatrix lhs = dense_matrix(multiply(x, y), q).matrix;
            const CMatrix rhs = dense_matrix(x, q).matrix * dense_matrix(y, q).matrix;
            REQUIRE((lhs - rhs).norm() <= 1e-12 * std::max(1.0, rhs.norm()));
        }
    }
}

TEST_CASE("dense realization of the adjoint is the conjugate transpose") {
    std::mt19937_64 rng(102);
    const PartitionGeometry g = random_geometry(rng, 2, 3, 2);
    const AlgebraElement x = testing::nonzero_random_element(rng, g);
    for (int q : {1, 2, 3}) {
        const CMatrix lhs = dense_matrix(adjoint(x), q).matrix;
        const CMatrix rhs = dense_matrix(x, q).matrix.adjoint();
        REQUIRE((lhs - rhs).norm() == 0.0);
    }
}

TEST_CASE("projectors resolve the identity and are mutually orthogonal") {
    std::mt19937_64 rng(103);
    for (int dim : {1, 2, 3}) {
        for (int q : {2, 3}) {
            const PartitionGeometry g = random_geometry(rng, dim, 2, dim == 3 ? 1 : 2);
            const long side = g.block_size() * detail::ipow(q, dim);
            CMatrix sum = CMatrix::Zero(side, side);
            std::vector<CMatrix> projectors;
            for (SubsetIndex alpha : all_subsets(dim)) {
                projectors.push_back(projector(g, alpha, q).matrix);
                sum += projectors.back();
            }
            REQUIRE((sum - CMatrix::Identity(side, side)).cwiseAbs().maxCoeff() <= 1e-12);
            for (std::size_t a = 0; a < projectors.size(); ++a) {
                for (std::size_t b = 0; b < projectors.size(); ++b) {
                    const CMatrix prod = projectors[a] * projectors[b];
                    const CMatrix expected = a == b ? projectors[a] : CMatrix::Zero(side, side);
                    REQUIRE((prod - expected).cwiseAbs().maxCoeff() <= 1e-12);
                }
            }
        }
    }
}

TEST_CASE("projector rank at q=2 is the block size") {
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(2, 2, 1);
    for (SubsetIndex alpha : all_subsets(2)) {
        const CMatrix p = projector(g, alpha, 2).matrix;
        // Orthogonal projector: rank equals trace.
        REQUIRE(std::abs(p.trace().real() - g.block_size()) <= 1e-12);
        REQUIRE(std::abs(p.trace().imag()) <= 1e-15);
    }
}

TEST_CASE("projectors commute with every dense realization") {
    std::mt19937_64 rng(104);
    const PartitionGeometry g = random_geometry(rng, 2, 2, 1);
    const AlgebraElement x = testing::nonzero_random_element(rng, g);
    const CMatrix d = dense_matrix(x, 2).matrix;
    for (SubsetIndex alpha : all_subsets(2)) {
        const CMatrix p = projector(g, alpha, 2).matrix;
        REQUIRE((d * p - p * d).norm() <= 1e-12 * std::max(1.0, d.norm()));
    }
}

TEST_CASE("q=2 dense spectrum is the disjoint union of block spectra") {
    std::mt19937_64 rng(105);
    for (int trial = 0; trial < 10; ++trial) {
        const int dim = 1 + static_cast<int>(rng() % 3);
        const int cells = 1 + static_cast<int>(rng() % 3);
        const PartitionGeometry g = random_geometry(rng, dim, cells, 1);
        const AlgebraElement x = testing::nonzero_random_element(rng, g);
        const Representation rep = represent(x);
        const double tol = 1e-9 * std::max(1.0, testing::representation_scale(rep));
        REQUIRE(eigenvalue_multisets_match(oracle_spectrum(x, 2), block_spectrum_multiset(x),
                                           tol));
    }
}

TEST_CASE("general-q multiplicity law on one axis") {
    // N=1 at q=3: B_{} eigenvalues appear (q-1) = 2 times, B_{1} once.
    std::mt19937_64 rng(106);
    const PartitionGeometry g = random_geometry(rng, 1, 2, 1);
    const AlgebraElement x = testing::nonzero_random_element(rng, g, 1.0);
    const Representation rep = represent(x);
    std::vector<Complex> expected;
    for (Complex v : block_eigenvalues(rep.block(SubsetIndex::empty()))) {
        expected.push_back(v);
        expected.push_back(v);
    }
    for (Complex v : block_eigenvalues(rep.block(SubsetIndex::from_axes({1}))))
        expected.push_back(v);
    const double tol = 1e-9 * std::max(1.0, testing::representation_scale(rep));
    REQUIRE(eigenvalue_multisets_match(oracle_spectrum(x, 3), expected, tol));
}

TEST_CASE("zero element has an all-zero oracle spectrum") {
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(2, 2, 1);
    for (Complex v : oracle_spectrum(zero_element(g), 2)) REQUIRE(std::abs(v) == 0.0);
}

TEST_CASE("oracle norm matches the blockwise norm at q=2") {
    std::mt19937_64 rng(107);
    for (int trial = 0; trial < 10; ++trial) {
        const int dim = 1 + static_cast<int>(rng() % 3);
        const PartitionGeometry g = random_geometry(rng, dim, 2, 1);
        const AlgebraElement x = testing::nonzero_random_element(rng, g);
        REQUIRE(std::abs(oracle_norm(x, 2) - operator_norm(x)) <= 1e-9);
    }
}

TEST_CASE("size guard rejects oversized dense realizations") {
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(2, 2, 1);
    const AlgebraElement x = identity_element(g);
    // side = 4 * 50^2 = 10000 > 4096.
    REQUIRE_THROWS_AS(dense_matrix(x, 50), SizeGuardExceeded);
    try {
        (void)dense_matrix(x, 50);
        FAIL("expected SizeGuardExceeded");
    } catch (const SizeGuardExceeded& e) {
        REQUIRE(e.requested() == 10000);
        REQUIRE(e.limit() == 4096);
    }
    // Explicit guard argument wins over the default.
    REQUIRE_THROWS_AS(dense_matrix(x, 2, 10), SizeGuardExceeded);
}

TEST_CASE("size guard honors the environment override") {
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(1, 2, 1);
    const AlgebraElement x = identity_element(g);
    ::setenv("OPCALC_MAX_DENSE", "3", 1);
    REQUIRE_THROWS_AS(dense_matrix(x, 2), SizeGuardExceeded);  // side 4 > 3
    ::setenv("OPCALC_MAX_DENSE", "4", 1);
    REQUIRE_NOTHROW(dense_matrix(x, 2));
    ::setenv("OPCALC_MAX_DENSE", "junk", 1);  // ignored, default applies
    REQUIRE_NOTHROW(dense_matrix(x, 2));
    ::unsetenv("OPCALC_MAX_DENSE");
}

TEST_CASE("eigenvalue multiset matching is optimal, not greedy") {
    SECTION("permutations match") {
        const std::vector<Complex> a{{1.0, 1.0}, {1.0, 1.0}, {2.0, 0.0}};
        const std::vector<Complex> b{{2.0, 0.0}, {1.0, 1.0}, {1.0, 1.0}};
        REQUIRE(eigenvalue_multisets_match(a, b, 1e-12));
    }
    SECTION("multiplicity mismatch is rejected") {
        const std::vector<Complex> a{{1.0, 1.0}, {1.0, 1.0}, {2.0, 0.0}};
        const std::vector<Complex> b{{1.0, 1.0}, {2.0, 0.0}, {2.0, 0.0}};
        REQUIRE_FALSE(eigenvalue_multisets_match(a, b, 1e-12));
    }
    SECTION("size mismatch is rejected") {
        REQUIRE_FALSE(eigenvalue_multisets_match({{1.0, 0.0}}, {}, 1.0));
    }
    SECTION("clustered values need the augmenting path") {
        // a0 can only take b0; a1 sits nearest to b0 so a nearest-first pairing
        // would strand a0, but pushing a1 to b1 completes the matching.
        // Dyadic values keep every pairwise distance exact.
        const std::vector<Complex> a{{0.0, 0.0}, {0.625, 0.0}};
        const std::vector<Complex> b{{0.5, 0.0}, {1.0, 0.0}};
        REQUIRE(eigenvalue_multisets_match(a, b, 0.6));
        REQUIRE_FALSE(eigenvalue_multisets_match(a, b, 0.45));
    }
}

TEST_CASE("dense matrix agrees with apply on random inputs") {
    std::mt19937_64 rng(108);
    const PartitionGeometry g = random_geometry(rng, 2, 2, 1);
    const AlgebraElement x = testing::nonzero_random_element(rng, g);
    for (int q : {1, 2, 3}) {
        const RefinedGridFunction u = testing::random_grid_function(rng, g, q);
        const CVector direct = apply(x, u).values();
        const CVector via_matrix = dense_matrix(x, q).matrix * u.values();
        REQUIRE((direct - via_matrix).norm() <= 1e-13 * std::max(1.0, via_matrix.norm()));
    }
}

TEST_CASE("compression onto a projector image matches the block spectrum") {
    // P_alpha D P_alpha restricted to its image is similar to B_alpha at q=2:
    // spectral check via multisets on the compressed matrix plus padding zeros.
    std::mt19937_64 rng(109);
    const PartitionGeometry g = random_geometry(rng, 2, 2, 1);
    const AlgebraElement x = testing::nonzero_random_element(rng, g, 1.0);
    const Representation rep = represent(x);
    const CMatrix d = dense_matrix(x, 2).matrix;
    const double tol = 1e-9 * std::max(1.0, testing::representation_scale(rep));
    for (SubsetIndex alpha : all_subsets(2)) {
        const CMatrix p = projector(g, alpha, 2).matrix;
        const CMatrix compressed = p * d * p;
        // Eigenvalues of PDP: those of B_alpha plus zeros from the kernel of P.
        std::vector<Complex> expected = block_eigenvalues(rep.block(alpha));
        for (long i = rep.block(alpha).rows(); i < compressed.rows(); ++i)
            expected.emplace_back(0.0, 0.0);
        REQUIRE(eigenvalue_multisets_match(block_eigenvalues(compressed), expected, tol));
    }
}
