#pragma once

// File formats for the CLI:
//   matrices  - MatrixMarket (coordinate or array, real general), or dense
//               text: a header line "rows cols" followed by rows*cols
//               values in row-major order;
//   vectors   - MatrixMarket with one column, or a plain whitespace
//               separated list of values;
//   structure - JSON {"kind":"toeplitz"} or
//               {"kind":"custom","m":..,"n":..,"basis":[[[i,j,v],..],..]}.

#include "ttls/core.hpp"
#include "ttls/structure.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace ttls::io {

using json = nlohmann::json;

namespace detail {

inline std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::Io, "cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string lower(std::string s)
{
    for (auto& c : s) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return s;
}

inline Matrix parse_matrix_market(std::istream& in, const std::string& banner, const std::string& where)
{
    std::istringstream bs(lower(banner));
    std::string tag, object, format, field, symmetry;
    bs >> tag >> object >> format >> field >> symmetry;
    if (object != "matrix" || (format != "coordinate" && format != "array")) {
        throw Error(Errc::Parse, where + ": unsupported MatrixMarket banner '" + banner + "'");
    }
    if (field != "real" && field != "integer" && field != "double") {
        throw Error(Errc::Parse, where + ": only real/integer fields are supported");
    }
    const bool symmetric = symmetry == "symmetric";
    if (!symmetric && symmetry != "general") {
        throw Error(Errc::Parse, where + ": unsupported symmetry '" + symmetry + "'");
    }

    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '%' && line.find_first_not_of(" \t\r") != std::string::npos) {
            break;
        }
    }
    std::istringstream size_line(line);
    long rows = 0, cols = 0, nnz = 0;
    size_line >> rows >> cols;
    if (format == "coordinate") {
        size_line >> nnz;
    }
    if (!size_line || rows <= 0 || cols <= 0) {
        throw Error(Errc::Parse, where + ": bad size line '" + line + "'");
    }

    Matrix M = Matrix::Zero(rows, cols);
    if (format == "coordinate") {
        for (long e = 0; e < nnz; ++e) {
            long i = 0, j = 0;
            double v = 0.0;
            if (!(in >> i >> j >> v)) {
                throw Error(Errc::Parse, where + ": expected " + std::to_string(nnz) + " entries");
            }
            if (i < 1 || i > rows || j < 1 || j > cols) {
                throw Error(Errc::Parse, where + ": entry index out of range");
            }
            M(i - 1, j - 1) = v;
            if (symmetric) {
                M(j - 1, i - 1) = v;
            }
        }
    } else {
        for (long j = 0; j < cols; ++j) {
            for (long i = symmetric ? j : 0; i < rows; ++i) {
                double v = 0.0;
                if (!(in >> v)) {
                    throw Error(Errc::Parse, where + ": array data ended early");
                }
                M(i, j) = v;
                if (symmetric) {
                    M(j, i) = v;
                }
            }
        }
    }
    return M;
}

} // namespace detail

inline Matrix parse_matrix(const std::string& text, const std::string& where = "<input>")
{
    std::istringstream in(text);
    std::string first;
    std::getline(in, first);
    if (first.rfind("%%MatrixMarket", 0) == 0) {
        return detail::parse_matrix_market(in, first, where);
    }
    std::istringstream all(text);
    long rows = 0, cols = 0;
    if (!(all >> rows >> cols) || rows <= 0 || cols <= 0) {
        throw Error(Errc::Parse, where + ": expected a 'rows cols' header");
    }
    Matrix M(rows, cols);
    for (long i = 0; i < rows; ++i) {
        for (long j = 0; j < cols; ++j) {
            if (!(all >> M(i, j))) {
                throw Error(Errc::Parse, where + ": expected " + std::to_string(rows * cols) + " values");
            }
        }
    }
    double extra = 0.0;
    if (all >> extra) {
        throw Error(Errc::Parse, where + ": trailing data after " + std::to_string(rows * cols) + " values");
    }
    return M;
}

inline Vector parse_vector(const std::string& text, const std::string& where = "<input>")
{
    if (text.rfind("%%MatrixMarket", 0) == 0) {
        const Matrix M = parse_matrix(text, where);
        if (M.cols() != 1 && M.rows() != 1) {
            throw Error(Errc::Parse, where + ": vector file holds a " + std::to_string(M.rows()) + "x"
                                         + std::to_string(M.cols()) + " matrix");
        }
        return Eigen::Map<const Vector>(M.data(), M.size());
    }
    std::istringstream in(text);
    std::vector<double> values;
    double v = 0.0;
    while (in >> v) {
        values.push_back(v);
    }
    if (!in.eof()) {
        throw Error(Errc::Parse, where + ": non-numeric token in vector file");
    }
    if (values.empty()) {
        throw Error(Errc::Parse, where + ": empty vector file");
    }
    return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

inline Matrix read_matrix(const std::string& path) { return parse_matrix(detail::slurp(path), path); }
inline Vector read_vector(const std::string& path) { return parse_vector(detail::slurp(path), path); }

inline void write_matrix_market(std::ostream& out, const Matrix& M)
{
    out << "%%MatrixMarket matrix array real general\n" << M.rows() << ' ' << M.cols() << '\n';
    out << std::setprecision(17);
    for (Index j = 0; j < M.cols(); ++j) {
        for (Index i = 0; i < M.rows(); ++i) {
            out << M(i, j) << '\n';
        }
    }
}

inline void write_matrix_market(const std::string& path, const Matrix& M)
{
    std::ofstream out(path);
    if (!out) {
        throw Error(Errc::Io, "cannot write " + path);
    }
    write_matrix_market(out, M);
}

// ---------------------------------------------------------------------------
// structure files

inline LinearStructure structure_from_json(const json& j, Index m, Index n)
{
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "toeplitz") {
            return toeplitz_structure(m, n);
        }
        if (kind != "custom") {
            throw Error(Errc::Parse, "structure: unknown kind '" + kind + "'");
        }
        const Index sm = j.at("m").get<Index>(), sn = j.at("n").get<Index>();
        if (sm != m || sn != n) {
            throw Error(Errc::DimensionMismatch, "structure is " + std::to_string(sm) + "x" + std::to_string(sn)
                                                     + " but A is " + std::to_string(m) + "x" + std::to_string(n));
        }
        std::vector<std::vector<Triplet>> basis;
        for (const auto& Sj : j.at("basis")) {
            std::vector<Triplet> Si;
            for (const auto& e : Sj) {
                if (!e.is_array() || e.size() != 3) {
                    throw Error(Errc::Parse, "structure: basis entries must be [i, j, v]");
                }
                Si.emplace_back(e[0].get<Index>(), e[1].get<Index>(), e[2].get<double>());
            }
            basis.push_back(std::move(Si));
        }
        return make_structure(m, n, std::move(basis));
    } catch (const json::exception& e) {
        throw Error(Errc::Parse, std::string("structure: ") + e.what());
    }
}

inline LinearStructure read_structure(const std::string& path, Index m, Index n)
{
    json j;
    try {
        j = json::parse(detail::slurp(path));
    } catch (const json::parse_error& e) {
        throw Error(Errc::Parse, path + ": " + e.what());
    }
    return structure_from_json(j, m, n);
}

// ---------------------------------------------------------------------------
// json helpers

inline json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

inline json to_json(const Matrix& M)
{
    json rows = json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        rows.push_back(to_json(Vector(M.row(i).transpose())));
    }
    return rows;
}

/// inf and nan are not JSON numbers; they are written as strings.
inline json number(double v)
{
    if (std::isfinite(v)) {
        return v;
    }
    if (std::isnan(v)) {
        return "nan";
    }
    return v > 0 ? "inf" : "-inf";
}

} // namespace ttls::io
