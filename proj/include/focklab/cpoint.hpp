#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <string>

#include "errors.hpp"
#include "log_complex.hpp"

namespace focklab {

inline constexpr int kMaxDim = 4;

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// A point of C^n, n <= 4.
struct CPoint {
    int n = 1;
    std::array<cplx, kMaxDim> c{};

    CPoint() = default;
    explicit CPoint(int dim) : n(dim) {
        if (dim < 1 || dim > kMaxDim) throw DimMismatch("dimension must be in 1..4");
    }
    CPoint(std::initializer_list<cplx> xs) : n(static_cast<int>(xs.size())) {
        if (n < 1 || n > kMaxDim) throw DimMismatch("dimension must be in 1..4");
        int i = 0;
        for (const auto& x : xs) c[i++] = x;
    }
    static CPoint scalar(cplx z) { return CPoint{z}; }
    static CPoint zero(int dim) { return CPoint(dim); }

    cplx& operator[](int i) { return c[i]; }
    const cplx& operator[](int i) const { return c[i]; }

    double norm2() const {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += std::norm(c[i]);
        return s;
    }
    double norm() const { return std::sqrt(norm2()); }
    bool finite() const {
        for (int i = 0; i < n; ++i)
            if (!std::isfinite(c[i].real()) || !std::isfinite(c[i].imag())) return false;
        return true;
    }

    CPoint conj() const {
        CPoint r(n);
        for (int i = 0; i < n; ++i) r.c[i] = std::conj(c[i]);
        return r;
    }

    friend CPoint operator+(const CPoint& a, const CPoint& b) {
        check(a, b);
        CPoint r(a.n);
        for (int i = 0; i < a.n; ++i) r.c[i] = a.c[i] + b.c[i];
        return r;
    }
    friend CPoint operator-(const CPoint& a, const CPoint& b) {
        check(a, b);
        CPoint r(a.n);
        for (int i = 0; i < a.n; ++i) r.c[i] = a.c[i] - b.c[i];
        return r;
    }
    friend CPoint operator-(const CPoint& a) {
        CPoint r(a.n);
        for (int i = 0; i < a.n; ++i) r.c[i] = -a.c[i];
        return r;
    }
    friend CPoint operator*(cplx s, const CPoint& a) {
        CPoint r(a.n);
        for (int i = 0; i < a.n; ++i) r.c[i] = s * a.c[i];
        return r;
    }
    friend CPoint operator*(double s, const CPoint& a) { return cplx(s, 0.0) * a; }

    static void check(const CPoint& a, const CPoint& b) {
        if (a.n != b.n) throw DimMismatch("point dimensions differ");
    }

    CVector to_vector() const {
        CVector v(n);
        for (int i = 0; i < n; ++i) v(i) = c[i];
        return v;
    }
    static CPoint from_vector(const CVector& v) {
        CPoint r(static_cast<int>(v.size()));
        for (int i = 0; i < r.n; ++i) r.c[i] = v(i);
        return r;
    }
};

/// <a, b> = sum a_j conj(b_j).
inline cplx inner(const CPoint& a, const CPoint& b) {
    CPoint::check(a, b);
    cplx s{0.0, 0.0};
    for (int i = 0; i < a.n; ++i) s += a.c[i] * std::conj(b.c[i]);
    return s;
}

inline double dist2(const CPoint& a, const CPoint& b) { return (a - b).norm2(); }

inline CPoint apply_matrix(const CMatrix& A, const CPoint& z) {
    if (A.rows() != z.n || A.cols() != z.n) throw DimMismatch("matrix and point dimensions differ");
    return CPoint::from_vector(A * z.to_vector());
}

}  // namespace focklab
