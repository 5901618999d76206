#pragma once

#include <Eigen/Dense>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace flange::mm {

/// Reads a MatrixMarket coordinate real matrix into dense storage. The
/// `symmetric` qualifier is honored: off-diagonal entries are mirrored.
inline Eigen::MatrixXd read_matrix(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("matrix market: empty stream");
    std::istringstream header(line);
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || object != "matrix")
        throw std::runtime_error("matrix market: bad banner");
    if (format != "coordinate") throw std::runtime_error("matrix market: only coordinate format supported");
    if (field != "real") throw std::runtime_error("matrix market: only real field supported");
    const bool symmetric = symmetry == "symmetric";
    if (!symmetric && symmetry != "general")
        throw std::runtime_error("matrix market: unsupported symmetry qualifier: " + symmetry);

    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '%') break;
    }
    std::istringstream sizes(line);
    long rows = 0, cols = 0, nnz = 0;
    if (!(sizes >> rows >> cols >> nnz)) throw std::runtime_error("matrix market: bad size line");
    if (rows <= 0 || cols <= 0) throw std::runtime_error("matrix market: non-positive dimensions");

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows, cols);
    for (long k = 0; k < nnz; ++k) {
        long i = 0, j = 0;
        double v = 0.0;
        if (!(in >> i >> j >> v)) throw std::runtime_error("matrix market: truncated entry list");
        if (i < 1 || i > rows || j < 1 || j > cols)
            throw std::runtime_error("matrix market: entry index out of range");
        M(i - 1, j - 1) += v;
        if (symmetric && i != j) M(j - 1, i - 1) += v;
    }
    return M;
}

inline Eigen::MatrixXd read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("matrix market: cannot open " + path);
    return read_matrix(in);
}

/// Writes the lower triangle of a symmetric matrix in coordinate format.
/// Deterministic: fixed traversal order and %.17g formatting.
inline void write_symmetric(std::ostream& out, const Eigen::MatrixXd& K) {
    if (K.rows() != K.cols()) throw std::invalid_argument("write_symmetric: matrix not square");
    long nnz = 0;
    for (Eigen::Index j = 0; j < K.cols(); ++j)
        for (Eigen::Index i = j; i < K.rows(); ++i)
            if (K(i, j) != 0.0) ++nnz;
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    out << K.rows() << " " << K.cols() << " " << nnz << "\n";
    char buf[64];
    for (Eigen::Index j = 0; j < K.cols(); ++j)
        for (Eigen::Index i = j; i < K.rows(); ++i)
            if (K(i, j) != 0.0) {
                std::snprintf(buf, sizeof(buf), "%.17g", K(i, j));
                out << (i + 1) << " " << (j + 1) << " " << buf << "\n";
            }
}

inline void write_symmetric_file(const std::string& path, const Eigen::MatrixXd& K) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("matrix market: cannot open " + path + " for writing");
    write_symmetric(out, K);
}

}  // namespace flange::mm
