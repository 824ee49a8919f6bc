// opcalc: batch front end for the operator-calculus library.
//
// Subcommands: spectrum, apply-fn, solve, discretize, schrodinger, verify,
// generate-random. JSON goes to stdout (or --out, written atomically);
// diagnostics go to stderr. Exit codes: 0 success, 2 input error,
// 3 numerical failure (including failed verification), 4 size guard.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <opcalc/opcalc.hpp>

namespace {

using namespace opcalc;
using nlohmann::json;

void emit(const json& j, const std::string& out_path) {
    const std::string text = io::canonical_dump(j);
    if (out_path.empty()) {
        std::cout << text;
    } else {
        io::write_file_atomic(out_path, text);
        std::cerr << "wrote " << out_path << "\n";
    }
}

[[nodiscard]] AlgebraElement load_element(const std::string& path) {
    return io::element_from_json(io::read_json_file(path));
}

[[nodiscard]] std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

[[nodiscard]] double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(what + ": cannot parse \"" + s + "\" as a number");
    }
}

[[nodiscard]] std::vector<double> parse_double_list(const std::string& s,
                                                    const std::string& what) {
    std::vector<double> out;
    for (const std::string& part : split(s, ','))
        out.push_back(parse_double(part, what));
    return out;
}

/// --fn parser: inverse | exp | sqrt | poly:c0,c1,... | resolvent:re,im
[[nodiscard]] MatrixFunctionSpec parse_function(const std::string& fn) {
    if (fn == "inverse") return MatrixFunctionSpec::inverse();
    if (fn == "exp") return MatrixFunctionSpec::exponential();
    if (fn == "sqrt") return MatrixFunctionSpec::sqrt_principal();
    if (fn.starts_with("poly:")) {
        std::vector<Complex> coeffs;
        for (double c : parse_double_list(fn.substr(5), "--fn poly"))
            coeffs.emplace_back(c, 0.0);
        return MatrixFunctionSpec::polynomial(std::move(coeffs));
    }
    if (fn.starts_with("resolvent:")) {
        const std::vector<double> parts = parse_double_list(fn.substr(10), "--fn resolvent");
        if (parts.size() != 2)
            throw ValidationError("--fn resolvent: expected resolvent:re,im");
        return MatrixFunctionSpec::resolvent(Complex{parts[0], parts[1]});
    }
    throw ValidationError("--fn: unknown function \"" + fn +
                          "\" (use inverse, exp, sqrt, poly:c0,c1,..., resolvent:re,im)");
}

/// Built-in kernel families for the discretize subcommand. Arbitrary code
/// does not cross the wire; these cover linear, polynomial, and
/// trigonometric kernels in 1D plus the 3D lattice symbol.
[[nodiscard]] MultiKernelSpec builtin_kernel(const std::string& name_and_params) {
    const std::size_t colon = name_and_params.find(':');
    const std::string name = name_and_params.substr(0, colon);
    std::vector<double> params;
    if (colon != std::string::npos)
        params = parse_double_list(name_and_params.substr(colon + 1), "--kernel " + name);

    MultiKernelSpec spec;
    if (name == "linear-sum") {
        // A_{1}(k, x) = k + x on [0,1)^2; gradient (1,1).
        spec.dim = 1;
        spec.kernels[SubsetIndex::from_axes({1})] = KernelEntry{
            [](const RVector& k, const RVector& x) { return k[0] + x[0]; },
            std::numbers::sqrt2};
        return spec;
    }
    if (name == "sin2-mult") {
        const double c = params.empty() ? 1.0 : params[0];
        if (params.size() > 1) throw ValidationError("--kernel sin2-mult takes one parameter");
        // A_{}(k) = c sin^2(pi k); |A'| <= |c| pi.
        spec.dim = 1;
        spec.kernels[SubsetIndex::empty()] = KernelEntry{
            [c](const RVector& k, const RVector&) {
                const double t = std::sin(std::numbers::pi * k[0]);
                return c * t * t;
            },
            std::abs(c) * std::numbers::pi};
        return spec;
    }
    if (name == "mixed-1d") {
        if (!params.empty()) throw ValidationError("--kernel mixed-1d takes no parameters");
        MultiKernelSpec a = builtin_kernel("linear-sum");
        MultiKernelSpec b = builtin_kernel("sin2-mult");
        a.kernels.merge(b.kernels);
        return a;
    }
    if (name == "poly-1d") {
        if (params.empty())
            throw ValidationError("--kernel poly-1d needs coefficients: poly-1d:c0,c1,...");
        // A_{1}(k, x) = sum_m c_m (k+x)^m; d/dt sup over t in [0,2], times
        // sqrt(2) for the two unit directions.
        double deriv_sup = 0.0;
        for (std::size_t m = 1; m < params.size(); ++m)
            deriv_sup += static_cast<double>(m) * std::abs(params[m]) *
                         std::pow(2.0, static_cast<double>(m - 1));
        spec.dim = 1;
        spec.kernels[SubsetIndex::from_axes({1})] = KernelEntry{
            [params](const RVector& k, const RVector& x) {
                const double t = k[0] + x[0];
                double r = 0.0;
                for (std::size_t m = params.size(); m-- > 0;) r = r * t + params[m];
                return r;
            },
            std::numbers::sqrt2 * deriv_sup};
        return spec;
    }
    if (name == "symbol-3d") {
        const double lambda = params.empty() ? 0.0 : params[0];
        if (params.size() > 1) throw ValidationError("--kernel symbol-3d takes one parameter");
        // A_{}(k) = lambda - 4 sum_n sin^2(pi k_n); |grad| <= 4 pi sqrt(3).
        spec.dim = 3;
        spec.kernels[SubsetIndex::empty()] = KernelEntry{
            [lambda](const RVector& k, const RVector&) {
                double s = 0.0;
                for (int n = 0; n < 3; ++n) {
                    const double t = std::sin(std::numbers::pi * k[n]);
                    s += t * t;
                }
                return lambda - 4.0 * s;
            },
            4.0 * std::numbers::pi * std::numbers::sqrt3};
        return spec;
    }
    throw ValidationError("--kernel: unknown built-in \"" + name +
                          "\" (use linear-sum, sin2-mult[:c], mixed-1d, poly-1d:c0,c1,..., "
                          "symbol-3d[:lambda])");
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

void run_spectrum(const std::string& spec_path, double dedup_tol, const std::string& out) {
    const AlgebraElement x = load_element(spec_path);
    emit(io::spectrum_report_to_json(spectrum(x, dedup_tol)), out);
}

void run_apply_fn(const std::string& spec_path, const std::string& fn, const std::string& out) {
    const AlgebraElement x = load_element(spec_path);
    emit(io::element_to_json(apply_function(x, parse_function(fn))), out);
}

void run_solve(const std::string& spec_path, const std::string& rhs_path, int q,
               const std::string& out) {
    const AlgebraElement x = load_element(spec_path);
    std::optional<RefinedGridFunction> rhs;
    if (!rhs_path.empty()) {
        rhs = io::grid_function_from_json(io::read_json_file(rhs_path), x.geometry());
        if (q > 0 && q != rhs->refinement())
            throw ValidationError("--q contradicts the rhs file's refinement");
    } else {
        rhs = RefinedGridFunction::constant(x.geometry(), q > 0 ? q : 1, Complex{1.0, 0.0});
    }
    emit(io::grid_function_to_json(solve(x, *rhs)), out);
}

void run_discretize(const std::string& kernel, int p, const std::string& out) {
    const MultiKernelSpec spec = builtin_kernel(kernel);
    const AlgebraElement x = sample_kernel(spec, p);
    emit(json{{"approximation_bound", approximation_bound(spec, p)},
              {"spec", io::element_to_json(x)}},
         out);
}

void run_schrodinger(const SchrodingerConfig& cfg, int eval_grid, const std::string& out) {
    const WaveSolution sol = solve_wavefunction(cfg);
    const SpectrumReport report = classify_spectrum(cfg);
    const SchrodingerErrorReport gaps = error_report(cfg);

    // Merge per-subset layers of equal cardinality under their physical names.
    json layers = json::object();
    for (int card = 0; card <= 3; ++card) {
        std::vector<Complex> merged;
        for (const auto& [alpha, values] : report.layers) {
            if (alpha.cardinality() != card) continue;
            for (Complex v : values)
                if (!detail::near_any(v, merged, report.dedup_tolerance)) merged.push_back(v);
        }
        detail::sort_complex(merged);
        layers[spectral_layer_name(card)] = io::complex_list_to_json(merged);
    }

    const int g = eval_grid > 0 ? eval_grid : cfg.p;
    json values = json::array();
    for (int i3 = 0; i3 < g; ++i3)
        for (int i2 = 0; i2 < g; ++i2)
            for (int i1 = 0; i1 < g; ++i1) {
                const Eigen::Vector3d k{(i1 + 0.5) / g, (i2 + 0.5) / g, (i3 + 0.5) / g};
                values.push_back(io::complex_to_json(sol.evaluate(k)));
            }

    emit(json{{"config",
               {{"lambda", cfg.lambda},
                {"epsilon", cfg.epsilon},
                {"potential", {cfg.potential[0], cfg.potential[1], cfg.potential[2]}},
                {"p", cfg.p}}},
              {"error_report",
               {{"operator_gap", gaps.operator_gap},
                {"wavefunction_gap", gaps.wavefunction_gap},
                {"spectral_gap", gaps.spectral_gap}}},
              {"spectrum_layers", std::move(layers)},
              {"psi", {{"eval_grid", g}, {"values", std::move(values)}}}},
         out);
}

/// Oracle verification: exercises the identities the library is allowed to
/// rely on, against the brute-force dense realization. Returns false when any
/// check fails.
[[nodiscard]] bool run_verify(const std::string& spec_path, int q, const std::string& out) {
    if (q < 2) throw ValidationError("--q: oracle checks need a refinement of at least 2");
    const AlgebraElement x = load_element(spec_path);
    const Representation rep = represent(x);

    double scale = 1.0;
    for (const CMatrix& b : rep.blocks()) scale = std::max(scale, b.norm());

    json checks = json::array();
    bool all_pass = true;
    auto record = [&](const std::string& name, bool pass, double err, double tol) {
        checks.push_back(json{{"name", name}, {"pass", pass}, {"error", err}, {"tolerance", tol}});
        all_pass = all_pass && pass;
        std::cerr << (pass ? "ok   " : "FAIL ") << name << "  error " << err << "  tolerance "
                  << tol << "\n";
    };

    {
        const AlgebraElement back = unrepresent(rep);
        double err = 0.0;
        for (SubsetIndex alpha : all_subsets(x.geometry().dim()))
            err = std::max(err, (back.coefficient(alpha) - x.coefficient(alpha)).norm());
        record("roundtrip", err <= 1e-13 * scale, err, 1e-13 * scale);
    }
    {
        const Representation prod = represent(multiply(x, x));
        double err = 0.0;
        for (std::size_t mask = 0; mask < prod.blocks().size(); ++mask)
            err = std::max(err, (prod.blocks()[mask] - rep.blocks()[mask] * rep.blocks()[mask]).norm());
        const double tol = 1e-12 * std::max(1.0, scale * scale);
        record("homomorphism", err <= tol, err, tol);
    }
    {
        const CMatrix lhs = dense_matrix(adjoint(x), q).matrix;
        const CMatrix rhs = dense_matrix(x, q).matrix.adjoint();
        const double err = (lhs - rhs).norm();
        record("adjoint-dense", err <= 1e-14 * scale, err, 1e-14 * scale);
    }
    {
        // Each block's eigenvalues enter the dense spectrum with multiplicity
        // (q-1)^(N-|alpha|) per cell subspace.
        std::vector<Complex> expected;
        for (std::size_t mask = 0; mask < rep.blocks().size(); ++mask) {
            const SubsetIndex alpha{static_cast<std::uint32_t>(mask)};
            const long mult = detail::ipow(q - 1, x.geometry().dim() - alpha.cardinality());
            const std::vector<Complex> evs = block_eigenvalues(rep.blocks()[mask]);
            for (long r = 0; r < mult; ++r) expected.insert(expected.end(), evs.begin(), evs.end());
        }
        const std::vector<Complex> actual = oracle_spectrum(x, q);
        const double tol = 1e-9 * scale;
        const bool pass = eigenvalue_multisets_match(expected, actual, tol);
        record("eigenvalue-multiset", pass, pass ? 0.0 : -1.0, tol);
    }
    {
        const double lib = operator_norm(x);
        const double oracle = oracle_norm(x, q);
        const double err = std::abs(lib - oracle);
        const double tol = 1e-9 * std::max(1.0, lib);
        record("operator-norm", err <= tol, err, tol);
    }

    emit(json{{"checks", std::move(checks)}, {"pass", all_pass}}, out);
    return all_pass;
}

void run_generate(unsigned long long seed, int dim, int cells, int comps, double fill,
                  bool invertible, const std::string& out) {
    std::mt19937_64 rng(seed);
    const int n = dim > 0 ? dim : 1 + random_int(rng, 0, 2);
    const int s = cells > 0 ? cells : 1 + random_int(rng, 0, 3);
    const int m = comps > 0 ? comps : 1 + random_int(rng, 0, 1);
    if (n > 6) throw ValidationError("--n: at most 6 axes for generated specs");
    if (s > 64) throw ValidationError("--s: at most 64 cells for generated specs");
    if (m > 8) throw ValidationError("--m: at most 8 components for generated specs");
    const PartitionGeometry geometry = random_geometry(rng, n, s, m);
    const AlgebraElement x = invertible ? random_invertible_element(rng, geometry)
                                        : random_element(rng, geometry, fill);
    emit(io::element_to_json(x), out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"operator calculus on piecewise-constant-kernel integral operators"};
    app.require_subcommand(1);
    int exit_code = 0;

    std::string spec_path, out_path, fn, rhs_path, kernel;
    double dedup_tol = 0.0;
    int q = 0;
    int p = 2;
    SchrodingerConfig cfg;
    int eval_grid = 0;
    unsigned long long seed = 1;
    int gen_n = 0, gen_s = 0, gen_m = 0;
    double gen_fill = 0.75;
    bool gen_invertible = false;

    CLI::App* c_spectrum = app.add_subcommand("spectrum", "eigenvalues, union, and layers");
    c_spectrum->add_option("spec", spec_path, "operator spec file")->required();
    c_spectrum->add_option("--dedup-tol", dedup_tol, "dedup tolerance (0 = auto)");
    c_spectrum->add_option("--out", out_path, "output path (default stdout)");
    c_spectrum->callback([&] { run_spectrum(spec_path, dedup_tol, out_path); });

    CLI::App* c_apply = app.add_subcommand("apply-fn", "matrix function of an operator");
    c_apply->add_option("spec", spec_path, "operator spec file")->required();
    c_apply->add_option("--fn", fn, "inverse|exp|sqrt|poly:c0,c1,...|resolvent:re,im")
        ->required();
    c_apply->add_option("--out", out_path, "output path (default stdout)");
    c_apply->callback([&] { run_apply_fn(spec_path, fn, out_path); });

    CLI::App* c_solve = app.add_subcommand("solve", "solve X w = rhs on a refined grid");
    c_solve->add_option("spec", spec_path, "operator spec file")->required();
    c_solve->add_option("--rhs", rhs_path, "grid-function JSON (default: constant 1)");
    c_solve->add_option("--q", q, "refinement (with --rhs: must match the file)");
    c_solve->add_option("--out", out_path, "output path (default stdout)");
    c_solve->callback([&] { run_solve(spec_path, rhs_path, q, out_path); });

    CLI::App* c_disc = app.add_subcommand("discretize", "midpoint-sample a built-in kernel");
    c_disc->add_option("--kernel", kernel, "built-in kernel name[:params]")->required();
    c_disc->add_option("--p", p, "subdivisions per axis")->required();
    c_disc->add_option("--out", out_path, "output path (default stdout)");
    c_disc->callback([&] { run_discretize(kernel, p, out_path); });

    CLI::App* c_schro = app.add_subcommand("schrodinger", "3D defect solver");
    c_schro->add_option("--lambda", cfg.lambda, "frequency");
    c_schro->add_option("--eps", cfg.epsilon, "attenuation (> 0)")->required();
    c_schro->add_option("--v1", cfg.potential[0], "defect strength, axis 1");
    c_schro->add_option("--v2", cfg.potential[1], "defect strength, axis 2");
    c_schro->add_option("--v3", cfg.potential[2], "defect strength, axis 3");
    c_schro->add_option("--p", cfg.p, "subdivisions per axis")->required();
    c_schro->add_option("--eval-grid", eval_grid, "wave sample grid (default p)");
    c_schro->add_option("--out", out_path, "output path (default stdout)");
    c_schro->callback([&] { run_schrodinger(cfg, eval_grid, out_path); });

    CLI::App* c_verify = app.add_subcommand("verify", "compare against the dense oracle");
    c_verify->add_option("spec", spec_path, "operator spec file")->required();
    c_verify->add_option("--q", q, "oracle refinement (default 2)");
    c_verify->add_option("--out", out_path, "report path (default stdout)");
    c_verify->callback([&] {
        if (!run_verify(spec_path, q > 0 ? q : 2, out_path)) exit_code = 3;
    });

    CLI::App* c_gen = app.add_subcommand("generate-random", "reproducible random spec");
    c_gen->add_option("--seed", seed, "generator seed")->required();
    c_gen->add_option("--n", gen_n, "axes (default: derived from seed, 1..3)");
    c_gen->add_option("--s", gen_s, "cells (default: derived from seed, 1..4)");
    c_gen->add_option("--m", gen_m, "components (default: derived from seed, 1..2)");
    c_gen->add_option("--fill", gen_fill, "per-subset coefficient probability");
    c_gen->add_flag("--invertible", gen_invertible, "well-conditioned invertible element");
    c_gen->add_option("--out", out_path, "output path (default stdout)");
    c_gen->callback(
        [&] { run_generate(seed, gen_n, gen_s, gen_m, gen_fill, gen_invertible, out_path); });

    try {
        app.parse(argc, argv);
        return exit_code;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const SizeGuardExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const NotInvertible& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const FunctionUndefinedOnSpectrum& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const BoundDiverges& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const SolverFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
