#include "bgnn/linalg.hpp"

#include <cmath>

namespace bgnn::linalg {

double norm2(const CVector& v) {
    double s = 0.0;
    for (const cplx& x : v) s += std::norm(x);
    return std::sqrt(s);
}

cplx dot_conj(const CVector& a, const CVector& b) {
    if (a.size() != b.size()) throw ShapeError("dot_conj: length mismatch");
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

namespace {

/// Cholesky factor L (lower) with A = L L^H.
CMatrix chol(const CMatrix& a) {
    const int n = a.rows();
    if (a.cols() != n) throw ShapeError("hpd_solve: matrix not square");
    CMatrix L(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            cplx s = a(i, j);
            for (int p = 0; p < j; ++p) s -= L(i, p) * std::conj(L(j, p));
            if (i == j) {
                const double d = s.real();
                if (d <= 0.0 || !std::isfinite(d))
                    throw SingularError("non-positive pivot in HPD factorization");
                L(i, i) = std::sqrt(d);
            } else {
                L(i, j) = s / L(j, j).real();
            }
        }
    }
    return L;
}

} // namespace

CMatrix hpd_solve(const CMatrix& a, const CMatrix& b) {
    const int n = a.rows();
    if (b.rows() != n) throw ShapeError("hpd_solve: rhs rows mismatch");
    CMatrix L = chol(a);
    CMatrix x = b;
    for (int j = 0; j < b.cols(); ++j) {
        for (int i = 0; i < n; ++i) {           // L y = b
            cplx s = x(i, j);
            for (int p = 0; p < i; ++p) s -= L(i, p) * x(p, j);
            x(i, j) = s / L(i, i).real();
        }
        for (int i = n - 1; i >= 0; --i) {      // L^H x = y
            cplx s = x(i, j);
            for (int p = i + 1; p < n; ++p) s -= std::conj(L(p, i)) * x(p, j);
            x(i, j) = s / L(i, i).real();
        }
    }
    return x;
}

CVector hpd_solve(const CMatrix& a, const CVector& b) {
    CMatrix rhs(static_cast<int>(b.size()), 1);
    for (std::size_t i = 0; i < b.size(); ++i) rhs(static_cast<int>(i), 0) = b[i];
    CMatrix x = hpd_solve(a, rhs);
    return x.col(0);
}

EigResult power_iteration_max_eig(const std::vector<double>& g, int n,
                                  const std::vector<double>* start) {
    if (static_cast<int>(g.size()) != n * n) throw ShapeError("power iteration: size mismatch");
    for (double v : g)
        if (v < 0.0 || !std::isfinite(v))
            throw ContractError("power iteration: matrix must be entrywise nonnegative");

    std::vector<double> x(static_cast<std::size_t>(n), 1.0);
    if (start != nullptr) {
        if (static_cast<int>(start->size()) != n)
            throw ShapeError("power iteration: start vector size mismatch");
        x = *start;
    }

    constexpr int kMaxIter = 100000;
    constexpr double kEigTol = 1e-12;
    constexpr double kResTol = 1e-10;

    std::vector<double> y(static_cast<std::size_t>(n));
    double lambda = 0.0;
    int stable = 0;
    for (int it = 1; it <= kMaxIter; ++it) {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            const double* row = g.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
            y[static_cast<std::size_t>(i)] = s;
        }
        // Rayleigh-style estimate: <x, Gx> / <x, x>
        double num = 0.0, den = 0.0;
        for (int i = 0; i < n; ++i) {
            num += x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
            den += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        }
        const double lambda_new = num / den;
        double ynorm = 0.0;
        for (double v : y) ynorm = std::max(ynorm, std::abs(v));
        if (ynorm == 0.0) throw ContractError("power iteration: matrix maps start vector to zero");
        for (double& v : y) v /= ynorm;
        x.swap(y);

        if (lambda > 0.0 && std::abs(lambda_new - lambda) <= kEigTol * std::abs(lambda_new))
            ++stable;
        else
            stable = 0;
        lambda = lambda_new;

        if (stable >= 3) {
            // residual check on the current iterate
            double res = 0.0;
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                const double* row = g.data() + static_cast<std::size_t>(i) * n;
                for (int j = 0; j < n; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
                res = std::max(res, std::abs(s - lambda * x[static_cast<std::size_t>(i)]));
            }
            if (res <= kResTol * std::abs(lambda)) {
                EigResult out;
                out.value = lambda;
                out.iterations = it;
                const double last = x[static_cast<std::size_t>(n - 1)];
                if (last == 0.0)
                    throw ContractError("power iteration: eigenvector has zero last entry");
                out.vector.resize(static_cast<std::size_t>(n));
                for (int i = 0; i < n; ++i)
                    out.vector[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] / last;
                return out;
            }
        }
    }
    throw ConvergenceError("power iteration did not converge within 1e5 iterations");
}

} // namespace bgnn::linalg
