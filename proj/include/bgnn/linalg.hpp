#pragma once

#include <complex>
#include <vector>

#include "bgnn/errors.hpp"

namespace bgnn::linalg {

using cplx = std::complex<double>;

/// Dense row-major complex matrix. Storage of std::complex<double> is an
/// interleaved re/im fp64 pair per entry.
class CMatrix {
public:
    CMatrix() = default;
    CMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    cplx& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    cplx operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    const std::vector<cplx>& values() const { return data_; }
    std::vector<cplx>& values() { return data_; }

    /// Column c as a vector.
    std::vector<cplx> col(int c) const {
        std::vector<cplx> out(static_cast<std::size_t>(rows_));
        for (int i = 0; i < rows_; ++i) out[static_cast<std::size_t>(i)] = (*this)(i, c);
        return out;
    }
    void set_col(int c, const std::vector<cplx>& v) {
        for (int i = 0; i < rows_; ++i) (*this)(i, c) = v[static_cast<std::size_t>(i)];
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<cplx> data_;
};

using CVector = std::vector<cplx>;

double norm2(const CVector& v);
cplx dot_conj(const CVector& a, const CVector& b); // a^H b

/// Solves A X = B for Hermitian positive definite A via Cholesky.
/// Throws SingularError on a non-positive pivot.
CMatrix hpd_solve(const CMatrix& a, const CMatrix& b);
CVector hpd_solve(const CMatrix& a, const CVector& b);

struct EigResult {
    double value = 0.0;
    std::vector<double> vector; // entrywise > 0, last entry normalized to 1
    int iterations = 0;
};

/// Dominant eigenpair of an entrywise-nonnegative square matrix by power
/// iteration from an all-ones start (or a caller-supplied start). Converged
/// when the eigenvalue estimate changes by <= 1e-12 relatively for three
/// consecutive iterations and the residual satisfies
/// ||G x - lambda x||_inf <= 1e-10 * lambda. Throws ConvergenceError after
/// 1e5 iterations.
EigResult power_iteration_max_eig(const std::vector<double>& g, int n,
                                  const std::vector<double>* start = nullptr);

} // namespace bgnn::linalg
