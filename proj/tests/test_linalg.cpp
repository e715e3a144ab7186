#include <doctest.h>

#include <cmath>
#include <complex>

#include "bgnn/linalg.hpp"
#include "bgnn/rng.hpp"

using namespace bgnn;
using namespace bgnn::linalg;

namespace {

/// Test-only oracle: explicit inverse by Gauss-Jordan with partial
/// pivoting, independent of the Cholesky path under test.
CMatrix gauss_inverse(CMatrix a) {
    const int n = a.rows();
    CMatrix inv(n, n);
    for (int i = 0; i < n; ++i) inv(i, i) = 1.0;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        for (int c = 0; c < n; ++c) {
            std::swap(a(col, c), a(pivot, c));
            std::swap(inv(col, c), inv(pivot, c));
        }
        const cplx d = a(col, col);
        REQUIRE(std::abs(d) > 0.0);
        for (int c = 0; c < n; ++c) {
            a(col, c) /= d;
            inv(col, c) /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const cplx f = a(r, col);
            for (int c = 0; c < n; ++c) {
                a(r, c) -= f * a(col, c);
                inv(r, c) -= f * inv(col, c);
            }
        }
    }
    return inv;
}

CVector random_cvec(int n, Rng& rng) {
    CVector v(static_cast<std::size_t>(n));
    for (auto& x : v) x = {rng.normal(), rng.normal()};
    return v;
}

} // namespace

TEST_CASE("hpd_solve: identity system returns the right-hand side") {
    CMatrix a(3, 3);
    for (int i = 0; i < 3; ++i) a(i, i) = 1.0;
    Rng rng(5);
    const CVector b = random_cvec(3, rng);
    const CVector x = hpd_solve(a, b);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(x[i] - b[i]) < 1e-14);
}

TEST_CASE("hpd_solve: scaled identity") {
    CMatrix a(2, 2);
    a(0, 0) = 2.0;
    a(1, 1) = 2.0;
    const CVector x = hpd_solve(a, CVector{2.0, 0.0});
    CHECK(std::abs(x[0] - cplx(1.0)) < 1e-15);
    CHECK(std::abs(x[1]) < 1e-15);
}

TEST_CASE("hpd_solve: random 4x4 regularized Gram matrix vs explicit-inverse oracle") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 4;
        CMatrix a(n, n);
        for (int i = 0; i < n; ++i) a(i, i) = 1.0; // noise * I
        for (int l = 0; l < 3; ++l) {
            const CVector h = random_cvec(n, rng);
            const double q = rng.uniform(0.1, 2.0);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) a(r, c) += q * h[r] * std::conj(h[c]);
        }
        const CVector b = random_cvec(n, rng);

        const CVector x = hpd_solve(a, b);
        const CMatrix inv = gauss_inverse(a);
        double bnorm = norm2(b);
        for (int r = 0; r < n; ++r) {
            cplx oracle = 0.0;
            for (int c = 0; c < n; ++c) oracle += inv(r, c) * b[static_cast<std::size_t>(c)];
            CHECK(std::abs(x[static_cast<std::size_t>(r)] - oracle) < 1e-9 * bnorm);
        }

        // residual contract
        for (int r = 0; r < n; ++r) {
            cplx res = -b[static_cast<std::size_t>(r)];
            for (int c = 0; c < n; ++c) res += a(r, c) * x[static_cast<std::size_t>(c)];
            CHECK(std::abs(res) < 1e-9 * bnorm);
        }
    }
}

TEST_CASE("hpd_solve: solve(A, A x) recovers x") {
    Rng rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 5;
        CMatrix a(n, n);
        for (int i = 0; i < n; ++i) a(i, i) = 1.0;
        for (int l = 0; l < n; ++l) {
            const CVector h = random_cvec(n, rng);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) a(r, c) += 0.5 * h[r] * std::conj(h[c]);
        }
        const CVector x = random_cvec(n, rng);
        CVector b(static_cast<std::size_t>(n), 0.0);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) b[static_cast<std::size_t>(r)] += a(r, c) * x[static_cast<std::size_t>(c)];
        const CVector rec = hpd_solve(a, b);
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(rec[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)]) <
                  1e-9 * norm2(x));
    }
}

TEST_CASE("hpd_solve: indefinite matrix raises a singularity error") {
    CMatrix a(2, 2);
    a(0, 0) = 1.0;
    a(0, 1) = 2.0;
    a(1, 0) = 2.0;
    a(1, 1) = 1.0;
    CHECK_THROWS_AS(hpd_solve(a, CVector{1.0, 1.0}), SingularError);
}

TEST_CASE("power iteration: hand-computable 2x2") {
    const std::vector<double> g{0.0, 1.0, 0.5, 0.5};
    const EigResult r = power_iteration_max_eig(g, 2);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.vector[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.vector[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("power iteration: zero first column with positive last column vs quadratic oracle") {
    // structure of the K = 1 coupling matrix: [[0, a], [0, b]]
    const double a = 0.7, b = 0.31;
    const std::vector<double> g{0.0, a, 0.0, b};
    // roots of x^2 - (tr)x + det = x^2 - b x = 0 -> max root b
    const double tr = b, det = 0.0;
    const double oracle = 0.5 * (tr + std::sqrt(tr * tr - 4.0 * det));
    const EigResult r = power_iteration_max_eig(g, 2);
    CHECK(r.value == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(r.vector[1] == 1.0);
    CHECK(r.vector[0] == doctest::Approx(a / b).epsilon(1e-9));
}

TEST_CASE("power iteration: all-ones matrix scaled by c has dominant eigenvalue 2c") {
    const double c = 0.37;
    const std::vector<double> g{c, c, c, c};
    const EigResult r = power_iteration_max_eig(g, 2);
    CHECK(r.value == doctest::Approx(2.0 * c).epsilon(1e-12));
    CHECK(r.vector[0] == doctest::Approx(1.0));
}

TEST_CASE("power iteration: eigenvalue invariant to positive rescaling of the start vector") {
    Rng rng(41);
    const int n = 4;
    std::vector<double> g(static_cast<std::size_t>(n) * n);
    for (auto& x : g) x = rng.uniform(0.05, 1.0);
    const EigResult base = power_iteration_max_eig(g, n);
    std::vector<double> start(static_cast<std::size_t>(n), 13.7);
    const EigResult scaled = power_iteration_max_eig(g, n, &start);
    CHECK(base.value == doctest::Approx(scaled.value).epsilon(1e-11));
}

TEST_CASE("power iteration: rejects negative entries") {
    const std::vector<double> g{1.0, -0.1, 0.0, 1.0};
    CHECK_THROWS_AS(power_iteration_max_eig(g, 2), ContractError);
}
