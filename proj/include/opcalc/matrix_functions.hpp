#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "opcalc/core.hpp"

namespace opcalc {

// ---------------------------------------------------------------------------
// Rank test
// ---------------------------------------------------------------------------

struct RankTest {
    double max_pivot = 0.0;
    double min_pivot = 0.0;
    bool singular = true;
    double condition = std::numeric_limits<double>::infinity();
};

/// Rank-revealing test on a full-pivot LU: singular when the smallest pivot
/// magnitude falls below rel_threshold times the largest. The pivot ratio
/// doubles as the reported condition estimate.
[[nodiscard]] inline RankTest rank_test(const Eigen::FullPivLU<CMatrix>& lu,
                                        double rel_threshold = kSingularityThreshold) {
    RankTest out;
    const auto diag = lu.matrixLU().diagonal();
    double minp = std::numeric_limits<double>::infinity();
    double maxp = 0.0;
    for (long i = 0; i < diag.size(); ++i) {
        const double a = std::abs(diag[i]);
        minp = std::min(minp, a);
        maxp = std::max(maxp, a);
    }
    out.max_pivot = maxp;
    out.min_pivot = minp;
    out.singular = maxp == 0.0 || minp <= rel_threshold * maxp;
    out.condition = minp > 0.0 ? maxp / minp : std::numeric_limits<double>::infinity();
    return out;
}

/// Inverse of one representation block; throws NotInvertible on rank failure.
[[nodiscard]] inline CMatrix block_inverse(const CMatrix& b, SubsetIndex alpha,
                                           double rel_threshold = kSingularityThreshold) {
    Eigen::FullPivLU<CMatrix> lu(b);
    const RankTest t = rank_test(lu, rel_threshold);
    if (t.singular) throw NotInvertible(alpha, t.condition);
    return lu.inverse();
}

// ---------------------------------------------------------------------------
// Scalar-function machinery
// ---------------------------------------------------------------------------

/// Eigenvalues only, via the complex eigensolver.
[[nodiscard]] inline std::vector<Complex> block_eigenvalues(const CMatrix& b) {
    Eigen::ComplexEigenSolver<CMatrix> es(b, false);
    if (es.info() != Eigen::Success)
        throw SolverFailure("eigenvalue iteration failed to converge");
    std::vector<Complex> out(static_cast<std::size_t>(b.rows()));
    for (long i = 0; i < b.rows(); ++i) out[static_cast<std::size_t>(i)] = es.eigenvalues()[i];
    return out;
}

/// Horner evaluation of a polynomial with coefficients c0 + c1 t + ... on a block.
[[nodiscard]] inline CMatrix polynomial_of_block(const CMatrix& b,
                                                 std::span<const Complex> coeffs) {
    const long n = b.rows();
    if (coeffs.empty()) return CMatrix::Zero(n, n);
    CMatrix r = CMatrix::Zero(n, n);
    r.diagonal().array() += coeffs.back();
    for (long k = static_cast<long>(coeffs.size()) - 2; k >= 0; --k) {
        r = (r * b).eval();
        r.diagonal().array() += coeffs[static_cast<std::size_t>(k)];
    }
    return r;
}

[[nodiscard]] inline Complex polynomial_of_scalar(Complex t, std::span<const Complex> coeffs) {
    Complex r{0.0, 0.0};
    for (auto k = coeffs.size(); k-- > 0;) r = r * t + coeffs[k];
    return r;
}

/// f(B) for an arbitrary scalar rule, via complex Schur form: the diagonal map
/// when T is numerically diagonal (normal block), the Parlett recurrence
/// otherwise. Repeated diagonal entries with nonzero coupling are rejected:
/// completing them needs derivative data the scalar rule does not carry.
[[nodiscard]] inline CMatrix scalar_function_of_block(const CMatrix& b,
                                                      const std::function<Complex(Complex)>& f,
                                                      SubsetIndex alpha) {
    const long n = b.rows();
    if (n == 0) return b;
    Eigen::ComplexSchur<CMatrix> schur(b, true);
    if (schur.info() != Eigen::Success) throw SolverFailure("Schur iteration failed to converge");
    const CMatrix& t = schur.matrixT();
    const CMatrix& u = schur.matrixU();
    const double scale = std::max(1.0, t.norm());

    CMatrix ft = CMatrix::Zero(n, n);
    for (long i = 0; i < n; ++i) {
        const Complex v = f(t(i, i));
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw FunctionUndefinedOnSpectrum(alpha, t(i, i), "function value is not finite");
        ft(i, i) = v;
    }

    double offdiag = 0.0;
    for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j) offdiag += std::norm(t(i, j));
    if (std::sqrt(offdiag) > 1e-13 * scale) {
        for (long d = 1; d < n; ++d) {
            for (long i = 0; i + d < n; ++i) {
                const long j = i + d;
                const Complex denom = t(j, j) - t(i, i);
                Complex num = t(i, j) * (ft(j, j) - ft(i, i));
                for (long k = i + 1; k < j; ++k)
                    num += t(i, k) * ft(k, j) - ft(i, k) * t(k, j);
                if (std::abs(denom) <= 1e-13 * scale)
                    throw FunctionUndefinedOnSpectrum(
                        alpha, t(i, i),
                        "repeated eigenvalue on a non-normal block; scalar rule is insufficient");
                ft(i, j) = num / denom;
            }
        }
    }
    return u * ft * u.adjoint();
}

// ---------------------------------------------------------------------------
// MatrixFunctionSpec
// ---------------------------------------------------------------------------

/// A recipe for a matrix function applied blockwise. Factories validate their
/// inputs once; evaluation never mutates the spec.
class MatrixFunctionSpec {
public:
    enum class Kind { inverse, resolvent, polynomial, rational, exponential, sqrt_principal, custom };

    static MatrixFunctionSpec inverse() { return MatrixFunctionSpec(Kind::inverse); }

    static MatrixFunctionSpec resolvent(Complex pole) {
        if (!std::isfinite(pole.real()) || !std::isfinite(pole.imag()))
            throw ValidationError("resolvent: pole must be finite");
        MatrixFunctionSpec s(Kind::resolvent);
        s.pole_ = pole;
        return s;
    }

    /// Coefficients in ascending degree: c0 + c1 t + c2 t^2 + ...
    static MatrixFunctionSpec polynomial(std::vector<Complex> coeffs) {
        require_poly(coeffs, "polynomial");
        MatrixFunctionSpec s(Kind::polynomial);
        s.num_ = std::move(coeffs);
        return s;
    }

    static MatrixFunctionSpec rational(std::vector<Complex> numerator,
                                       std::vector<Complex> denominator) {
        require_poly(numerator, "rational numerator");
        require_poly(denominator, "rational denominator");
        bool all_zero = true;
        for (Complex c : denominator) all_zero = all_zero && c == Complex{0.0, 0.0};
        if (all_zero) throw ValidationError("rational: denominator is identically zero");
        MatrixFunctionSpec s(Kind::rational);
        s.num_ = std::move(numerator);
        s.den_ = std::move(denominator);
        return s;
    }

    static MatrixFunctionSpec exponential() { return MatrixFunctionSpec(Kind::exponential); }

    /// Principal square root; defined off the closed negative real axis.
    static MatrixFunctionSpec sqrt_principal() { return MatrixFunctionSpec(Kind::sqrt_principal); }

    static MatrixFunctionSpec custom(std::function<Complex(Complex)> f,
                                     std::string name = "custom") {
        if (!f) throw ValidationError("custom function must be callable");
        MatrixFunctionSpec s(Kind::custom);
        s.fn_ = std::move(f);
        s.name_ = std::move(name);
        return s;
    }

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] Complex pole() const { return pole_; }
    [[nodiscard]] const std::vector<Complex>& numerator() const { return num_; }
    [[nodiscard]] const std::vector<Complex>& denominator() const { return den_; }

    [[nodiscard]] std::string describe() const {
        switch (kind_) {
            case Kind::inverse: return "inverse";
            case Kind::resolvent: return "resolvent";
            case Kind::polynomial: return "polynomial[deg " + std::to_string(num_.size() - 1) + "]";
            case Kind::rational: return "rational";
            case Kind::exponential: return "exp";
            case Kind::sqrt_principal: return "sqrt";
            case Kind::custom: return name_;
        }
        return "?";
    }

    /// The scalar rule behind the spec. Pole and branch conditions are the
    /// caller's to check; this merely evaluates.
    [[nodiscard]] Complex evaluate_scalar(Complex t) const {
        switch (kind_) {
            case Kind::inverse: return Complex{1.0, 0.0} / t;
            case Kind::resolvent: return Complex{1.0, 0.0} / (t - pole_);
            case Kind::polynomial: return polynomial_of_scalar(t, num_);
            case Kind::rational:
                return polynomial_of_scalar(t, num_) / polynomial_of_scalar(t, den_);
            case Kind::exponential: return std::exp(t);
            case Kind::sqrt_principal: return std::sqrt(t);
            case Kind::custom: return fn_(t);
        }
        return {};
    }

    [[nodiscard]] const std::function<Complex(Complex)>& scalar_rule() const { return fn_; }

private:
    explicit MatrixFunctionSpec(Kind kind) : kind_(kind) {}

    static void require_poly(const std::vector<Complex>& coeffs, const char* what) {
        if (coeffs.empty()) throw ValidationError(std::string(what) + ": no coefficients");
        for (Complex c : coeffs)
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
                throw ValidationError(std::string(what) + ": non-finite coefficient");
    }

    Kind kind_;
    Complex pole_{0.0, 0.0};
    std::vector<Complex> num_;
    std::vector<Complex> den_;
    std::function<Complex(Complex)> fn_;
    std::string name_;
};

/// Evaluate a function spec on one representation block.
[[nodiscard]] inline CMatrix apply_block_function(const CMatrix& b, const MatrixFunctionSpec& spec,
                                                  SubsetIndex alpha) {
    switch (spec.kind()) {
        case MatrixFunctionSpec::Kind::inverse:
            return block_inverse(b, alpha);

        case MatrixFunctionSpec::Kind::resolvent: {
            CMatrix shifted = b;
            shifted.diagonal().array() -= spec.pole();
            Eigen::FullPivLU<CMatrix> lu(shifted);
            if (rank_test(lu).singular) {
                Complex offender = spec.pole();
                double best = std::numeric_limits<double>::infinity();
                for (Complex ev : block_eigenvalues(b)) {
                    const double d = std::abs(ev - spec.pole());
                    if (d < best) {
                        best = d;
                        offender = ev;
                    }
                }
                throw FunctionUndefinedOnSpectrum(alpha, offender, "pole meets the spectrum");
            }
            return lu.inverse();
        }

        case MatrixFunctionSpec::Kind::polynomial:
            return polynomial_of_block(b, spec.numerator());

        case MatrixFunctionSpec::Kind::rational: {
            const CMatrix den = polynomial_of_block(b, spec.denominator());
            Eigen::FullPivLU<CMatrix> lu(den);
            if (rank_test(lu).singular) {
                Complex offender{0.0, 0.0};
                double best = std::numeric_limits<double>::infinity();
                for (Complex ev : block_eigenvalues(b)) {
                    const double d = std::abs(polynomial_of_scalar(ev, spec.denominator()));
                    if (d < best) {
                        best = d;
                        offender = ev;
                    }
                }
                throw FunctionUndefinedOnSpectrum(alpha, offender,
                                                  "denominator vanishes on the spectrum");
            }
            return lu.solve(polynomial_of_block(b, spec.numerator()));
        }

        case MatrixFunctionSpec::Kind::exponential:
            return b.exp();

        case MatrixFunctionSpec::Kind::sqrt_principal: {
            const std::vector<Complex> evs = block_eigenvalues(b);
            double radius = 0.0;
            for (Complex ev : evs) radius = std::max(radius, std::abs(ev));
            const double cut_tol = 1e-12 * std::max(1.0, radius);
            for (Complex ev : evs)
                if (ev.real() <= cut_tol && std::abs(ev.imag()) <= cut_tol)
                    throw FunctionUndefinedOnSpectrum(
                        alpha, ev, "spectrum touches the branch cut of the principal root");
            return b.sqrt();
        }

        case MatrixFunctionSpec::Kind::custom:
            return scalar_function_of_block(b, spec.scalar_rule(), alpha);
    }
    throw Error("unreachable function kind");
}

}  // namespace opcalc
