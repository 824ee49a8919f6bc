#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "opcalc/calculus.hpp"
#include "opcalc/element.hpp"
#include "opcalc/fredholm.hpp"

namespace opcalc::io {

using nlohmann::json;

// Canonical form: sorted keys (the library's object ordering), two-space
// indent, shortest round-trip float printing, trailing newline. Re-parsing
// and re-dumping canonical output is byte-identical.
[[nodiscard]] inline std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Scalars and matrices
// ---------------------------------------------------------------------------

[[nodiscard]] inline json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

[[nodiscard]] inline Complex complex_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ValidationError(where + ": expected [re, im]");
    return Complex{j[0].get<double>(), j[1].get<double>()};
}

[[nodiscard]] inline json matrix_to_json(const CMatrix& m) {
    json rows = json::array();
    for (long r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (long c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

[[nodiscard]] inline CMatrix matrix_from_json(const json& j, long rows, long cols,
                                              const std::string& where) {
    if (!j.is_array() || static_cast<long>(j.size()) != rows)
        throw ValidationError(where + ": expected " + std::to_string(rows) + " rows");
    CMatrix m(rows, cols);
    for (long r = 0; r < rows; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<long>(row.size()) != cols)
            throw ValidationError(where + ": row " + std::to_string(r + 1) + " must have " +
                                  std::to_string(cols) + " entries");
        for (long c = 0; c < cols; ++c)
            m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)],
                                        where + "[" + std::to_string(r + 1) + "," +
                                            std::to_string(c + 1) + "]");
    }
    return m;
}

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.contains(it.key()))
            throw ValidationError(where + ": unknown field \"" + it.key() + "\"");
}

inline int require_int(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number_integer())
        throw ValidationError(where + ": field \"" + key + "\" must be an integer");
    return j.at(key).get<int>();
}

inline double require_number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw ValidationError(where + ": field \"" + key + "\" must be a number");
    return j.at(key).get<double>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Operator spec files
// ---------------------------------------------------------------------------

/// Element -> spec document. One term per nonzero M x M block, ordered by
/// (subset, i, j); exact-zero blocks are dropped.
[[nodiscard]] inline json element_to_json(const AlgebraElement& x) {
    const PartitionGeometry& g = x.geometry();
    const int m = g.components();
    json vertices = json::array();
    for (int i = 1; i <= g.cells(); ++i) {
        json v = json::array();
        for (int n = 0; n < g.dim(); ++n) v.push_back(g.vertex(i)[n]);
        vertices.push_back(std::move(v));
    }
    json terms = json::array();
    for (const auto& [alpha, mat] : x.coefficients()) {
        json axes = json::array();
        for (int axis : alpha.axes()) axes.push_back(axis);
        for (int i = 1; i <= g.cells(); ++i) {
            for (int j = 1; j <= g.cells(); ++j) {
                const CMatrix block = mat.block((i - 1) * m, (j - 1) * m, m, m);
                if (block.isZero(0.0)) continue;
                terms.push_back(json{{"alpha", axes},
                                     {"i", i},
                                     {"j", j},
                                     {"matrix", matrix_to_json(block)}});
            }
        }
    }
    return json{{"N", g.dim()},    {"S", g.cells()},       {"M", g.components()},
                {"h", g.cell_size()}, {"vertices", vertices}, {"terms", terms}};
}

[[nodiscard]] inline AlgebraElement element_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("spec: top level must be an object");
    detail::reject_unknown_keys(j, {"N", "S", "M", "h", "vertices", "terms"}, "spec");
    const int dim = detail::require_int(j, "N", "spec");
    const int cells = detail::require_int(j, "S", "spec");
    const int comps = detail::require_int(j, "M", "spec");
    const double h = detail::require_number(j, "h", "spec");
    if (!j.contains("vertices") || !j.at("vertices").is_array())
        throw ValidationError("spec: field \"vertices\" must be an array");
    if (!j.contains("terms") || !j.at("terms").is_array())
        throw ValidationError("spec: field \"terms\" must be an array");
    if (dim < 1 || dim > kMaxDim) throw ValidationError("spec: N out of range");
    if (cells < 1) throw ValidationError("spec: S must be positive");
    if (comps < 1) throw ValidationError("spec: M must be positive");

    const json& jv = j.at("vertices");
    if (static_cast<int>(jv.size()) != cells)
        throw ValidationError("spec: expected " + std::to_string(cells) + " vertices");
    std::vector<RVector> vertices;
    vertices.reserve(static_cast<std::size_t>(cells));
    for (int i = 0; i < cells; ++i) {
        const json& row = jv[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != dim)
            throw ValidationError("spec: vertex " + std::to_string(i + 1) + " must have " +
                                  std::to_string(dim) + " coordinates");
        RVector v(dim);
        for (int n = 0; n < dim; ++n) {
            if (!row[static_cast<std::size_t>(n)].is_number())
                throw ValidationError("spec: vertex " + std::to_string(i + 1) +
                                      " has a non-numeric coordinate");
            v[n] = row[static_cast<std::size_t>(n)].get<double>();
        }
        vertices.push_back(std::move(v));
    }
    const PartitionGeometry geometry(dim, comps, h, std::move(vertices));

    AlgebraElement::CoefficientMap coeffs;
    const int ms = geometry.block_size();
    int index = 0;
    for (const json& term : j.at("terms")) {
        ++index;
        const std::string where = "spec: term " + std::to_string(index);
        if (!term.is_object()) throw ValidationError(where + " must be an object");
        detail::reject_unknown_keys(term, {"alpha", "i", "j", "matrix"}, where);
        if (!term.contains("alpha") || !term.at("alpha").is_array())
            throw ValidationError(where + ": field \"alpha\" must be an array of axes");
        std::vector<int> axes;
        for (const json& a : term.at("alpha")) {
            if (!a.is_number_integer())
                throw ValidationError(where + ": alpha entries must be integers");
            const int axis = a.get<int>();
            if (axis < 1 || axis > dim)
                throw ValidationError(where + ": axis " + std::to_string(axis) +
                                      " outside [1," + std::to_string(dim) + "]");
            axes.push_back(axis);
        }
        const SubsetIndex alpha = SubsetIndex::from_axes(axes);
        if (alpha.cardinality() != static_cast<int>(axes.size()))
            throw ValidationError(where + ": alpha has duplicate axes");
        const int i = detail::require_int(term, "i", where);
        const int jj = detail::require_int(term, "j", where);
        if (i < 1 || i > cells || jj < 1 || jj > cells)
            throw ValidationError(where + ": cell index outside [1," + std::to_string(cells) +
                                  "]");
        if (!term.contains("matrix"))
            throw ValidationError(where + ": field \"matrix\" missing");
        const CMatrix block =
            matrix_from_json(term.at("matrix"), comps, comps, where + ": matrix");
        auto [it, inserted] = coeffs.try_emplace(alpha, CMatrix::Zero(ms, ms));
        it->second.block((i - 1) * comps, (jj - 1) * comps, comps, comps) += block;
    }
    return AlgebraElement(geometry, std::move(coeffs));
}

// ---------------------------------------------------------------------------
// Grid functions
// ---------------------------------------------------------------------------

[[nodiscard]] inline json grid_function_to_json(const RefinedGridFunction& u) {
    json values = json::array();
    for (long i = 0; i < u.values().size(); ++i) values.push_back(complex_to_json(u.values()[i]));
    return json{{"q", u.refinement()}, {"values", values}};
}

[[nodiscard]] inline RefinedGridFunction grid_function_from_json(const json& j,
                                                                 const PartitionGeometry& g) {
    if (!j.is_object()) throw ValidationError("grid function: top level must be an object");
    detail::reject_unknown_keys(j, {"q", "values"}, "grid function");
    const int q = detail::require_int(j, "q", "grid function");
    if (!j.contains("values") || !j.at("values").is_array())
        throw ValidationError("grid function: field \"values\" must be an array");
    const json& jv = j.at("values");
    CVector v(static_cast<long>(jv.size()));
    for (std::size_t i = 0; i < jv.size(); ++i)
        v[static_cast<long>(i)] =
            complex_from_json(jv[i], "grid function: value " + std::to_string(i + 1));
    return RefinedGridFunction(g, q, std::move(v));
}

// ---------------------------------------------------------------------------
// Step Fredholm operators
// ---------------------------------------------------------------------------

[[nodiscard]] inline json fredholm_to_json(const StepFredholmOperator& op) {
    json a = json::array();
    for (long i = 0; i < op.A.size(); ++i) a.push_back(complex_to_json(op.A[i]));
    return json{{"S", op.steps()}, {"A", a}, {"B", matrix_to_json(op.B)}};
}

[[nodiscard]] inline StepFredholmOperator fredholm_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("step operator: top level must be an object");
    detail::reject_unknown_keys(j, {"S", "A", "B"}, "step operator");
    const int s = detail::require_int(j, "S", "step operator");
    if (s < 1) throw ValidationError("step operator: S must be positive");
    if (!j.contains("A") || !j.at("A").is_array() || static_cast<int>(j.at("A").size()) != s)
        throw ValidationError("step operator: field \"A\" must be an array of S entries");
    CVector a(s);
    for (int i = 0; i < s; ++i)
        a[i] = complex_from_json(j.at("A")[static_cast<std::size_t>(i)],
                                 "step operator: A[" + std::to_string(i + 1) + "]");
    const CMatrix b = matrix_from_json(j.at("B"), s, s, "step operator: B");
    return StepFredholmOperator(std::move(a), b);
}

// ---------------------------------------------------------------------------
// Spectrum reports
// ---------------------------------------------------------------------------

[[nodiscard]] inline json complex_list_to_json(const std::vector<Complex>& values) {
    json out = json::array();
    for (Complex v : values) out.push_back(complex_to_json(v));
    return out;
}

[[nodiscard]] inline json spectrum_report_to_json(const SpectrumReport& report) {
    json per_alpha = json::object();
    for (const auto& [alpha, evs] : report.per_subset)
        per_alpha[alpha.to_string()] = complex_list_to_json(evs);
    json layers = json::object();
    for (const auto& [alpha, evs] : report.layers)
        layers[alpha.to_string()] = complex_list_to_json(evs);
    return json{{"per_alpha", std::move(per_alpha)},
                {"union", complex_list_to_json(report.union_values)},
                {"layers", std::move(layers)}};
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

/// Parse with a line-anchored error message on failure.
[[nodiscard]] inline json parse_json_text(const std::string& text, const std::string& name) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        const std::size_t upto = std::min(e.byte, text.size());
        for (std::size_t i = 0; i < upto; ++i)
            if (text[i] == '\n') ++line;
        throw ValidationError(name + ":" + std::to_string(line) + ": " + e.what());
    }
}

[[nodiscard]] inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_json_text(buf.str(), path.filename().string());
}

/// Atomic write: temp file in the target directory, then rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        if (!out.good()) throw Error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace opcalc::io
