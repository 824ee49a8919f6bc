// Lattice Schrodinger operator on [0,1)^3 with axis-aligned defect potentials:
// symbol sampling, operator assembly, the alternating-sum wave solve, Fourier
// readout, spectral layers, and the a-priori error report.

#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace opcalc;

namespace {

SchrodingerConfig general_config() {
    SchrodingerConfig cfg;
    cfg.lambda = 0.0;
    cfg.epsilon = 1.0;
    cfg.potential = {3.0, -2.0, 1.0};
    cfg.p = 2;
    return cfg;
}

}  // namespace

TEST_CASE("symbol values at lattice-symmetric points") {
    SchrodingerConfig cfg;
    cfg.lambda = 2.5;
    cfg.epsilon = 0.75;
    REQUIRE(schrodinger_symbol(cfg, {0.0, 0.0, 0.0}) == Complex{2.5, -0.75});
    // sin(pi/2) = 1 on every axis: lambda - 12 - i eps.
    const Complex mid = schrodinger_symbol(cfg, {0.5, 0.5, 0.5});
    REQUIRE(std::abs(mid - Complex{2.5 - 12.0, -0.75}) <= 1e-12);
}

TEST_CASE("single-cell operator is the symbol at the center") {
    SchrodingerConfig cfg;
    cfg.lambda = -1.0;
    cfg.epsilon = 0.5;
    cfg.p = 1;
    const AlgebraElement op = build_operator(cfg);
    REQUIRE(op.geometry().cells() == 1);
    REQUIRE(op.coefficient(SubsetIndex::empty())(0, 0) ==
            schrodinger_symbol(cfg, {0.5, 0.5, 0.5}));
}

TEST_CASE("potential terms follow the off-axis alignment pattern") {
    const SchrodingerConfig cfg = general_config();
    const AlgebraElement op = build_operator(cfg);
    const PartitionGeometry& g = op.geometry();
    const double h = g.cell_size();

    // Pointwise part: the symbol on the diagonal, nothing off it.
    const CMatrix& diag = op.coefficient(SubsetIndex::empty());
    Eigen::Vector3d center;
    for (int i = 1; i <= g.cells(); ++i) {
        for (int n = 0; n < 3; ++n) center[n] = g.vertex(i)[n] + h / 2.0;
        REQUIRE(diag(i - 1, i - 1) == schrodinger_symbol(cfg, center));
        for (int j = 1; j <= g.cells(); ++j)
            if (j != i) REQUIRE(diag(i - 1, j - 1) == Complex{0.0, 0.0});
    }

    // Axis terms: -h V on cell pairs sharing the two transverse coordinates.
    for (int axis = 1; axis <= 3; ++axis) {
        const CMatrix& mat = op.coefficient(SubsetIndex::from_axes({axis}));
        const double v = cfg.potential[static_cast<std::size_t>(axis - 1)];
        for (int i = 1; i <= g.cells(); ++i)
            for (int j = 1; j <= g.cells(); ++j) {
                bool aligned = true;
                for (int n = 1; n <= 3; ++n)
                    if (n != axis && g.vertex(i)[n - 1] != g.vertex(j)[n - 1]) aligned = false;
                const Complex expected = aligned ? Complex{-h * v, 0.0} : Complex{0.0, 0.0};
                REQUIRE(mat(i - 1, j - 1) == expected);
            }
    }
}

TEST_CASE("every block is Hermitian after removing the absorption shift") {
    const AlgebraElement op = build_operator(general_config());
    const Representation rep = represent(op);
    const double eps = general_config().epsilon;
    for (const CMatrix& b : rep.blocks()) {
        const CMatrix shifted =
            b + Complex{0.0, eps} * CMatrix::Identity(b.rows(), b.cols());
        REQUIRE((shifted - shifted.adjoint()).norm() <= 1e-13);
    }
}

TEST_CASE("a defect-free medium solves pointwise") {
    SchrodingerConfig cfg;
    cfg.lambda = 1.0;
    cfg.epsilon = 0.8;
    cfg.potential = {0.0, 0.0, 0.0};
    cfg.p = 2;
    const WaveSolution sol = solve_wavefunction(cfg);
    const AlgebraElement op = build_operator(cfg);
    const CMatrix& diag = op.coefficient(SubsetIndex::empty());
    for (int i = 0; i < sol.geometry.cells(); ++i)
        REQUIRE(std::abs(sol.cell_values[i] - 1.0 / diag(i, i)) <= 1e-13);
    for (const auto& [alpha, mat] : sol.C)
        if (!alpha.is_empty()) REQUIRE(mat.norm() <= 1e-13);
}

TEST_CASE("the wave solution satisfies the discrete equation") {
    const SchrodingerConfig cfg = general_config();
    const WaveSolution sol = solve_wavefunction(cfg);
    const AlgebraElement op = build_operator(cfg);
    for (int q : {1, 2}) {
        const RefinedGridFunction psi = wave_as_grid_function(sol, q);
        const RefinedGridFunction lhs = apply(op, psi);
        const RefinedGridFunction one =
            RefinedGridFunction::constant(op.geometry(), q, Complex{1.0, 0.0});
        const RefinedGridFunction diff(op.geometry(), q, lhs.values() - one.values());
        REQUIRE(diff.l2_norm() <= 1e-9 * one.l2_norm());
    }
}

TEST_CASE("alternating sums reproduce the inverse element") {
    const SchrodingerConfig cfg = general_config();
    const WaveSolution sol = solve_wavefunction(cfg);
    const AlgebraElement inv = invert(build_operator(cfg));
    REQUIRE(sol.C.size() == 8);
    for (const auto& [alpha, mat] : sol.C)
        REQUIRE((mat - inv.coefficient(alpha)).norm() <=
                1e-12 * std::max(1.0, mat.norm()));
}

TEST_CASE("the full-subset combination carries the eight signs") {
    const SchrodingerConfig cfg = general_config();
    const WaveSolution sol = solve_wavefunction(cfg);
    const Representation rep = represent(build_operator(cfg));
    std::vector<CMatrix> inv;
    inv.reserve(8);
    for (std::uint32_t mask = 0; mask < 8; ++mask)
        inv.push_back(block_inverse(rep.blocks()[mask], SubsetIndex{mask}));
    // + B_{123}  - B_{12} - B_{13} - B_{23}  + B_{1} + B_{2} + B_{3}  - B_{}
    const CMatrix expected = inv[0b111] - inv[0b011] - inv[0b101] - inv[0b110] +
                             inv[0b001] + inv[0b010] + inv[0b100] - inv[0b000];
    REQUIRE((sol.C.at(SubsetIndex::full(3)) - expected).norm() <= 1e-13);
}

TEST_CASE("successive refinements stay within the a-priori budget") {
    SchrodingerConfig coarse = general_config();
    coarse.epsilon = 0.5;
    for (int p : {1, 2}) {
        coarse.p = p;
        SchrodingerConfig fine = coarse;
        fine.p = 2 * p;
        const WaveSolution a = solve_wavefunction(coarse);
        const WaveSolution b = solve_wavefunction(fine);
        const double h = 1.0 / p;
        const double budget =
            48.0 * std::numbers::pi * h / (coarse.epsilon * coarse.epsilon);
        REQUIRE(wave_l2_difference(a, b) <= budget);
    }
    // Non-nested grids are refused.
    SchrodingerConfig odd = general_config();
    odd.p = 3;
    REQUIRE_THROWS_AS(
        wave_l2_difference(solve_wavefunction(general_config()), solve_wavefunction(odd)),
        ValidationError);
}

TEST_CASE("evaluate reads the covering cell") {
    const WaveSolution sol = solve_wavefunction(general_config());
    // Two points in the same cell see the same value.
    REQUIRE(sol.evaluate({0.1, 0.6, 0.3}) == sol.evaluate({0.4, 0.9, 0.2}));
    // Digits (0,1,0) with axis 1 least significant: index 2.
    REQUIRE(sol.evaluate({0.1, 0.6, 0.3}) == sol.cell_values[2]);
    REQUIRE_THROWS_AS(sol.evaluate({1.0, 0.5, 0.5}), ValidationError);
    REQUIRE_THROWS_AS(sol.evaluate({0.5, -0.1, 0.5}), ValidationError);
}

TEST_CASE("fourier coefficients of the piecewise-constant solution") {
    const WaveSolution sol = solve_wavefunction(general_config());
    const double h = sol.geometry.cell_size();

    // Zero frequency integrates the solution.
    Complex mean{0.0, 0.0};
    for (int i = 0; i < sol.geometry.cells(); ++i) mean += sol.cell_values[i];
    mean *= h * h * h;
    REQUIRE(std::abs(fourier_coefficient(sol, {0, 0, 0}) - mean) <= 1e-14);

    // Against a midpoint quadrature of psi * e^{-2 pi i n.k} on a fine grid.
    for (const std::array<long, 3>& n : {std::array<long, 3>{1, 0, 0},
                                         std::array<long, 3>{1, 2, 0}}) {
        const int fine = 64;
        const double step = 1.0 / fine;
        Complex quad{0.0, 0.0};
        Eigen::Vector3d k;
        for (int a = 0; a < fine; ++a)
            for (int b = 0; b < fine; ++b)
                for (int c = 0; c < fine; ++c) {
                    k << (a + 0.5) * step, (b + 0.5) * step, (c + 0.5) * step;
                    const double phase =
                        -2.0 * std::numbers::pi * (n[0] * k[0] + n[1] * k[1] + n[2] * k[2]);
                    quad += sol.evaluate(k) * Complex{std::cos(phase), std::sin(phase)};
                }
        quad *= step * step * step;
        const Complex closed = fourier_coefficient(sol, n);
        REQUIRE(std::abs(closed - quad) <= 5e-3 * std::max(1.0, std::abs(closed)));
    }
}

TEST_CASE("spectral layers are named by defect dimension") {
    REQUIRE(std::string(spectral_layer_name(0)) == "volume");
    REQUIRE(std::string(spectral_layer_name(1)) == "planar");
    REQUIRE(std::string(spectral_layer_name(2)) == "guided");
    REQUIRE(std::string(spectral_layer_name(3)) == "local");
    REQUIRE(std::string(spectral_layer_name(7)) == "unknown");
}

TEST_CASE("a defect-free medium has only volume spectrum") {
    SchrodingerConfig cfg;
    cfg.lambda = 1.0;
    cfg.epsilon = 0.5;
    cfg.potential = {0.0, 0.0, 0.0};
    cfg.p = 2;
    const SpectrumReport rep = classify_spectrum(cfg);
    // At p = 2 every cell center sees sin^2 = 1/2 on each axis, so the free
    // symbol is one repeated value; the volume layer holds it alone.
    REQUIRE(rep.layers.at(SubsetIndex::empty()).size() == 1);
    REQUIRE(std::abs(rep.layers.at(SubsetIndex::empty())[0] -
                     Complex{cfg.lambda - 6.0, -cfg.epsilon}) <= 1e-12);
    for (const auto& [alpha, vals] : rep.layers)
        if (!alpha.is_empty()) REQUIRE(vals.empty());
}

TEST_CASE("defect potentials open higher layers") {
    const SpectrumReport rep = classify_spectrum(general_config());
    // All three axis potentials differ, so each axis block shifts away from
    // the free spectrum and contributes a planar layer.
    for (int axis = 1; axis <= 3; ++axis)
        REQUIRE_FALSE(rep.layers.at(SubsetIndex::from_axes({axis})).empty());
}

TEST_CASE("error report scales with the mesh and the absorption") {
    SchrodingerConfig cfg;
    cfg.lambda = 0.0;
    cfg.epsilon = 1.0;
    cfg.p = 1;
    const SchrodingerErrorReport r1 = error_report(cfg);
    REQUIRE(std::abs(r1.operator_gap - 24.0 * std::numbers::pi) <= 1e-12);
    REQUIRE(r1.spectral_gap == r1.operator_gap);
    REQUIRE(r1.wavefunction_gap == r1.operator_gap);

    cfg.p = 2;
    const SchrodingerErrorReport r2 = error_report(cfg);
    REQUIRE(std::abs(r2.operator_gap - r1.operator_gap / 2.0) <= 1e-12);

    cfg.epsilon = 1000.0;
    const SchrodingerErrorReport r3 = error_report(cfg);
    REQUIRE(r3.wavefunction_gap <= 1e-4);
    REQUIRE(r3.operator_gap == r2.operator_gap);
}

TEST_CASE("configuration validation") {
    SchrodingerConfig cfg;
    cfg.epsilon = 0.0;
    REQUIRE_THROWS_AS(error_report(cfg), ValidationError);
    cfg.epsilon = -1.0;
    REQUIRE_THROWS_AS(error_report(cfg), ValidationError);
    cfg.epsilon = 1.0;
    cfg.p = 0;
    REQUIRE_THROWS_AS(error_report(cfg), ValidationError);
    // Large grids need the explicit opt-in; the check itself is cheap.
    cfg.p = 9;
    REQUIRE_THROWS_AS(error_report(cfg), ValidationError);
    cfg.allow_large = true;
    REQUIRE_NOTHROW(error_report(cfg));
}
