#pragma once

#include <limits>
#include <utility>

#include "opcalc/calculus.hpp"
#include "opcalc/element.hpp"
#include "opcalc/matrix_functions.hpp"

namespace opcalc {

// ---------------------------------------------------------------------------
// Step-kernel Fredholm operators on [0,1)
// ---------------------------------------------------------------------------

/// The 1D operator  u(x) |-> A(x)u(x) + integral of B(x,y)u(y) dy  where A is
/// the step function with value A[i] on cell i and B is the step kernel with
/// value S*B(i,j) on cell (i,j). Note the convention: the stored entry is
/// B(i,j), not S*B(i,j); the S factor lives in the kernel, matching the way
/// the {1}-coefficient enters the algebra directly.
struct StepFredholmOperator {
    CVector A;
    CMatrix B;

    StepFredholmOperator(CVector a, CMatrix b) : A(std::move(a)), B(std::move(b)) {
        if (A.size() < 1) throw ValidationError("step operator: need at least one step");
        if (B.rows() != A.size() || B.cols() != A.size())
            throw ValidationError("step operator: B must be " + std::to_string(A.size()) + "x" +
                                  std::to_string(A.size()));
        if (!A.allFinite() || !B.allFinite())
            throw ValidationError("step operator: non-finite entries");
    }

    [[nodiscard]] int steps() const { return static_cast<int>(A.size()); }
};

/// The step operator as an algebra element on the uniform S-cell grid of
/// [0,1): diagonal empty-subset coefficient diag(A), {1}-coefficient B.
[[nodiscard]] inline AlgebraElement to_element(const StepFredholmOperator& op) {
    const int s = op.steps();
    const PartitionGeometry geometry = PartitionGeometry::uniform_unit_cube(1, s, 1);
    AlgebraElement::CoefficientMap coeffs;
    coeffs.emplace(SubsetIndex::empty(), CMatrix(op.A.asDiagonal()));
    coeffs.emplace(SubsetIndex::from_axes({1}), op.B);
    return AlgebraElement(geometry, std::move(coeffs));
}

namespace detail {

/// f on one scalar with the same guards the block route applies: poles and
/// branch cuts are measured against the scale of the containing diagonal.
[[nodiscard]] inline Complex scalar_function_checked(Complex t, const MatrixFunctionSpec& f,
                                                     double scale, SubsetIndex where) {
    const double floor = kSingularityThreshold * std::max(1.0, scale);
    switch (f.kind()) {
        case MatrixFunctionSpec::Kind::inverse:
            if (std::abs(t) <= floor)
                throw NotInvertible(where, std::abs(t) > 0.0
                                               ? scale / std::abs(t)
                                               : std::numeric_limits<double>::infinity());
            break;
        case MatrixFunctionSpec::Kind::resolvent:
            if (std::abs(t - f.pole()) <= floor)
                throw FunctionUndefinedOnSpectrum(where, t, "pole meets the spectrum");
            break;
        case MatrixFunctionSpec::Kind::rational:
            if (std::abs(polynomial_of_scalar(t, f.denominator())) <= 1e-13 * std::max(1.0, scale))
                throw FunctionUndefinedOnSpectrum(where, t, "denominator vanishes on the spectrum");
            break;
        case MatrixFunctionSpec::Kind::sqrt_principal: {
            const double cut = 1e-12 * std::max(1.0, scale);
            if (t.real() <= cut && std::abs(t.imag()) <= cut)
                throw FunctionUndefinedOnSpectrum(
                    where, t, "spectrum touches the branch cut of the principal root");
            break;
        }
        default:
            break;
    }
    const Complex v = f.evaluate_scalar(t);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw FunctionUndefinedOnSpectrum(where, t, "function value is not finite");
    return v;
}

}  // namespace detail

/// Closed-form functional calculus for step operators: the multiplication
/// part maps through f entrywise, the kernel part is f(diag(A)+B) - f(diag(A)).
/// Cross-checks the general blockwise route, which must agree exactly on this
/// family.
[[nodiscard]] inline StepFredholmOperator closed_form_function(const StepFredholmOperator& op,
                                                               const MatrixFunctionSpec& f) {
    const int s = op.steps();
    double scale = 0.0;
    for (int i = 0; i < s; ++i) scale = std::max(scale, std::abs(op.A[i]));

    CVector fa(s);
    for (int i = 0; i < s; ++i)
        fa[i] = detail::scalar_function_checked(op.A[i], f, scale, SubsetIndex::empty());

    CMatrix full = CMatrix(op.A.asDiagonal());
    full += op.B;
    const CMatrix ffull = apply_block_function(full, f, SubsetIndex::from_axes({1}));
    CMatrix fb = ffull;
    fb -= CMatrix(fa.asDiagonal());
    return StepFredholmOperator(std::move(fa), std::move(fb));
}

/// JSON-facing helpers live in io.hpp; spectrum etc. go through to_element.

}  // namespace opcalc
