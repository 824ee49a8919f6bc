// Discretization module: multiplication / integration / rearrangement
// operators, midpoint kernel sampling, a-priori bounds, and the exact
// refinement embedding behind the measured gap.

#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace opcalc;
using opcalc::testing::m1;

namespace {

MultiKernelSpec linear_sum_kernel() {
    MultiKernelSpec spec;
    spec.dim = 1;
    spec.kernels[SubsetIndex::from_axes({1})] =
        KernelEntry{[](const RVector& k, const RVector& x) { return k[0] + x[0]; },
                    std::numbers::sqrt2};
    return spec;
}

MultiKernelSpec sine_multiplier_kernel() {
    MultiKernelSpec spec;
    spec.dim = 1;
    spec.kernels[SubsetIndex::empty()] = KernelEntry{
        [](const RVector& k, const RVector&) {
            const double s = std::sin(std::numbers::pi * k[0]);
            return s * s;
        },
        std::numbers::pi};
    return spec;
}

}  // namespace

// ---------------------------------------------------------------------------
// Multiplication operators
// ---------------------------------------------------------------------------

TEST_CASE("multiplication by one is the identity element") {
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(2, 2, 2);
    const std::vector<CMatrix> ones(static_cast<std::size_t>(g.cells()),
                                    CMatrix::Identity(2, 2));
    REQUIRE(testing::element_gap(multiplication_operator(g, ones), identity_element(g)) == 0.0);
}

TEST_CASE("multiplication operator stacks cell matrices on the diagonal") {
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(1, 2, 1);
    const AlgebraElement x = multiplication_operator(g, {m1(2.0), m1(3.0)});
    REQUIRE(x.coefficients().size() == 1);
    const CMatrix expected = (CMatrix(2, 2) << 2.0, 0.0, 0.0, 3.0).finished();
    REQUIRE((x.coefficient(SubsetIndex::empty()) - expected).norm() == 0.0);
    // With only a pointwise term every representation block coincides with it.
    const Representation rep = represent(x);
    for (const CMatrix& b : rep.blocks()) REQUIRE((b - expected).norm() == 0.0);
}

TEST_CASE("spectrum of a matrix multiplier is the union of cell eigenvalues") {
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(1, 2, 2);
    const CMatrix a1 = (CMatrix(2, 2) << 1.0, 1.0, 0.0, 2.0).finished();
    const CMatrix a2 = (CMatrix(2, 2) << 5.0, 0.0, 3.0, 7.0).finished();
    const SpectrumReport rep = spectrum(multiplication_operator(g, {a1, a2}));
    const std::vector<Complex> expected{{1.0, 0.0}, {2.0, 0.0}, {5.0, 0.0}, {7.0, 0.0}};
    REQUIRE(testing::sorted_close(rep.union_values, expected, 1e-9));
}

TEST_CASE("multiplication operator validates its input") {
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(1, 2, 1);
    REQUIRE_THROWS_AS(multiplication_operator(g, {m1(2.0)}), ValidationError);
    REQUIRE_THROWS_AS(multiplication_operator(g, {m1(2.0), CMatrix::Zero(2, 2)}),
                      ValidationError);
}

// ---------------------------------------------------------------------------
// Integration operators
// ---------------------------------------------------------------------------

TEST_CASE("axis integration over a one-axis chain couples every cell pair") {
    const int p = 4;
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(1, p, 1);
    const AlgebraElement x = integral_operator(g, 1);
    const CMatrix expected = g.cell_size() * CMatrix::Ones(p, p);
    REQUIRE((x.coefficient(SubsetIndex::from_axes({1})) - expected).norm() == 0.0);

    // Applying it writes the integral of u into every slot.
    std::mt19937_64 rng(41);
    const int q = 3;
    const RefinedGridFunction u = testing::random_grid_function(rng, g, q);
    Complex integral{0.0, 0.0};
    for (long i = 0; i < u.values().size(); ++i) integral += u.values()[i];
    integral *= g.cell_size() / q;
    const RefinedGridFunction v = apply(x, u);
    for (long i = 0; i < v.values().size(); ++i)
        REQUIRE(std::abs(v.values()[i] - integral) <= 1e-14);
}

TEST_CASE("axis integration skips rows that live on other slices") {
    // Two cells stacked along axis 2 share no axis-1 row.
    std::vector<RVector> vertices{(RVector(2) << 0.0, 0.0).finished(),
                                  (RVector(2) << 0.0, 0.5).finished()};
    const PartitionGeometry g(2, 1, 0.5, vertices);
    const AlgebraElement x = integral_operator(g, 1);
    const CMatrix expected = 0.5 * CMatrix::Identity(2, 2);
    REQUIRE((x.coefficient(SubsetIndex::from_axes({1})) - expected).norm() == 0.0);
}

TEST_CASE("partially overlapping rows are reported with axis and cell") {
    std::vector<RVector> vertices{(RVector(2) << 0.0, 0.0).finished(),
                                  (RVector(2) << 0.6, 0.25).finished()};
    const PartitionGeometry g(2, 1, 0.5, vertices);
    try {
        (void)integral_operator(g, 1);
        FAIL("expected GeometryNotAxisComplete");
    } catch (const GeometryNotAxisComplete& e) {
        REQUIRE(e.axis() == 1);
        REQUIRE(e.cell() == 1);
    }
    REQUIRE_THROWS_AS(integral_operator(g, 3), ValidationError);
}

// ---------------------------------------------------------------------------
// Rearrangement operators
// ---------------------------------------------------------------------------

TEST_CASE("identity rearrangement is the identity element") {
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(1, 3, 1);
    const CellMapping mapping{{{1, 2, 3}}};
    REQUIRE(testing::element_gap(ergodic_operator(g, mapping), identity_element(g)) == 0.0);
}

TEST_CASE("cell swap has the plus-minus-one spectrum") {
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(1, 2, 1);
    const AlgebraElement x = ergodic_operator(g, CellMapping{{{2, 1}}});
    const CMatrix expected = (CMatrix(2, 2) << 0.0, 1.0, 1.0, 0.0).finished();
    REQUIRE((x.coefficient(SubsetIndex::empty()) - expected).norm() == 0.0);
    const SpectrumReport rep = spectrum(x);
    REQUIRE(testing::sorted_close(rep.union_values, {{-1.0, 0.0}, {1.0, 0.0}}, 1e-12));
}

TEST_CASE("per-component rearrangements act independently") {
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(1, 2, 2);
    const AlgebraElement x = ergodic_operator(g, CellMapping{{{1, 2}, {2, 1}}});
    std::mt19937_64 rng(42);
    const int q = 2;
    const RefinedGridFunction u = testing::random_grid_function(rng, g, q);
    const RefinedGridFunction v = apply(x, u);
    const int swap[] = {0, 2, 1};
    for (int cell = 1; cell <= 2; ++cell)
        for (long t = 0; t < q; ++t) {
            REQUIRE(v.value(cell, t, 1) == u.value(cell, t, 1));
            REQUIRE(v.value(cell, t, 2) == u.value(swap[cell], t, 2));
        }
}

TEST_CASE("rearrangement validation") {
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(1, 2, 1);
    REQUIRE_THROWS_AS(ergodic_operator(g, CellMapping{{{1, 3}}}), ValidationError);
    REQUIRE_THROWS_AS(ergodic_operator(g, CellMapping{{{1}}}), ValidationError);
    REQUIRE_THROWS_AS(ergodic_operator(g, CellMapping{{}}), ValidationError);
}

// ---------------------------------------------------------------------------
// Midpoint sampling
// ---------------------------------------------------------------------------

TEST_CASE("linear kernel samples to the exact midpoint matrix") {
    const AlgebraElement x = sample_kernel(linear_sum_kernel(), 2);
    // Midpoints 1/4 and 3/4, weight 1/2: entries (k_i + x_j) / 2.
    const CMatrix expected = (CMatrix(2, 2) << 0.25, 0.5, 0.5, 0.75).finished();
    REQUIRE((x.coefficient(SubsetIndex::from_axes({1})) - expected).norm() == 0.0);
}

TEST_CASE("sampling a pointwise kernel matches the multiplication operator") {
    MultiKernelSpec spec;
    spec.dim = 1;
    spec.kernels[SubsetIndex::empty()] =
        KernelEntry{[](const RVector&, const RVector&) { return 2.5; }, 0.0};
    const int p = 3;
    const AlgebraElement sampled = sample_kernel(spec, p);
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(1, p, 1);
    const std::vector<CMatrix> cells(static_cast<std::size_t>(p), m1(2.5));
    REQUIRE(testing::element_gap(sampled, multiplication_operator(g, cells)) == 0.0);
}

TEST_CASE("sampling a symmetric kernel yields a self-adjoint element") {
    for (int p : {2, 4}) {
        const AlgebraElement x = sample_kernel(linear_sum_kernel(), p);
        REQUIRE(testing::element_gap(adjoint(x), x) == 0.0);
    }
}

// ---------------------------------------------------------------------------
// A-priori bounds
// ---------------------------------------------------------------------------

TEST_CASE("a-priori gap bound from gradient sups") {
    const MultiKernelSpec spec = linear_sum_kernel();
    REQUIRE(std::abs(approximation_bound(spec, 2) - std::numbers::sqrt2 / 4.0) <= 1e-15);
    // Doubling the grid halves the bound exactly.
    REQUIRE(approximation_bound(spec, 4) == approximation_bound(spec, 2) / 2.0);

    MultiKernelSpec no_bound = spec;
    no_bound.kernels[SubsetIndex::from_axes({1})].grad_sup.reset();
    REQUIRE_THROWS_AS(approximation_bound(no_bound, 2), ValidationError);

    MultiKernelSpec empty;
    empty.dim = 2;
    REQUIRE(approximation_bound(empty, 2) == 0.0);
}

TEST_CASE("gradient sup estimator recovers known bounds") {
    const double linear = estimate_grad_sup(linear_sum_kernel(), SubsetIndex::from_axes({1}));
    REQUIRE(std::abs(linear - std::numbers::sqrt2) <= 1e-6);
    const double sine = estimate_grad_sup(sine_multiplier_kernel(), SubsetIndex::empty(), 101);
    REQUIRE(std::abs(sine - std::numbers::pi) <= 1e-2);
    REQUIRE(estimate_grad_sup(linear_sum_kernel(), SubsetIndex::empty()) == 0.0);
}

TEST_CASE("measured gap stays under the a-priori bound and shrinks with p") {
    for (const MultiKernelSpec& spec : {linear_sum_kernel(), sine_multiplier_kernel()}) {
        const double gap2 = measured_approximation_gap(spec, 2);
        const double gap4 = measured_approximation_gap(spec, 4);
        REQUIRE(gap2 <= approximation_bound(spec, 2));
        REQUIRE(gap4 <= approximation_bound(spec, 4));
        // First-order method: the measured gap roughly halves.
        REQUIRE(gap4 / gap2 >= 0.3);
        REQUIRE(gap4 / gap2 <= 0.8);
    }
}

TEST_CASE("piecewise-constant kernels sample exactly") {
    MultiKernelSpec spec;
    spec.dim = 1;
    spec.kernels[SubsetIndex::empty()] = KernelEntry{
        [](const RVector& k, const RVector&) { return k[0] < 0.5 ? 1.0 : 2.0; }, 0.0};
    REQUIRE(measured_approximation_gap(spec, 2) <= 1e-12);
}

TEST_CASE("spectral enclosure fattens the spectrum by delta") {
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(1, 2, 1);
    const SpectrumReport rep = spectrum(multiplication_operator(g, {m1(1.0), m1(3.0)}));
    const SpectralEnclosure exact = spectral_enclosure(0.0, rep);
    REQUIRE(exact.contains(Complex{1.0, 0.0}));
    REQUIRE(exact.contains(Complex{3.0, 0.0}));
    REQUIRE_FALSE(exact.contains(Complex{2.0, 0.0}));
    REQUIRE(spectral_enclosure(0.2, rep).contains(Complex{1.15, 0.1}));
    REQUIRE_FALSE(spectral_enclosure(0.2, rep).contains(Complex{1.35, 0.25}));
    REQUIRE_THROWS_AS(spectral_enclosure(-0.1, rep), ValidationError);
}

TEST_CASE("inverse perturbation bound") {
    REQUIRE(inverse_error_bound(0.1, 2.0) == 0.5);
    REQUIRE(inverse_error_bound(0.0, 100.0) == 0.0);
    REQUIRE_THROWS_AS(inverse_error_bound(0.5, 2.0), BoundDiverges);
    REQUIRE_THROWS_AS(inverse_error_bound(-1.0, 1.0), ValidationError);
}

// ---------------------------------------------------------------------------
// Refinement embedding
// ---------------------------------------------------------------------------

TEST_CASE("refinement embedding preserves the operator") {
    std::mt19937_64 rng(43);
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(2, 2, 1);
    const AlgebraElement x = testing::nonzero_random_element(rng, g);
    const AlgebraElement fine = embed_in_refinement(x, 2);
    REQUIRE(fine.geometry().cells() == 16);
    REQUIRE(std::abs(operator_norm(fine) - operator_norm(x)) <= 1e-12);
    // Same action on the refined grid, so the dense realizations share the
    // eigenvalue multiset.
    const std::vector<Complex> coarse_eigs = oracle_spectrum(x, 2);
    const std::vector<Complex> fine_eigs = oracle_spectrum(fine, 1);
    const double scale = testing::representation_scale(represent(x));
    REQUIRE(eigenvalue_multisets_match(coarse_eigs, fine_eigs, 1e-9 * std::max(1.0, scale)));
}

TEST_CASE("embedding with factor one is the identity operation") {
    std::mt19937_64 rng(44);
    const PartitionGeometry g = PartitionGeometry::uniform_unit_cube(1, 3, 2);
    const AlgebraElement x = testing::nonzero_random_element(rng, g);
    REQUIRE(testing::element_gap(embed_in_refinement(x, 1), x) == 0.0);
}

TEST_CASE("embedding requires a uniform unit-cube geometry") {
    std::mt19937_64 rng(45);
    const PartitionGeometry g = random_geometry(rng, 2, 3, 1);
    const AlgebraElement x = testing::nonzero_random_element(rng, g);
    REQUIRE_THROWS_AS(embed_in_refinement(x, 2), ValidationError);
}
