#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "cpoint.hpp"
#include "errors.hpp"
#include "log_complex.hpp"
#include "quadrature.hpp"

namespace focklab {

/**
 * @brief Small expression catalog for multipliers m and densities g on R.
 *
 * Kinds: constant, indicator[lo, hi], sign (value * sgn x), gaussian
 * (value e^{-(x-center)^2 / (2 width^2)}), rational (value / (1 + ((x-center)/width)^2)),
 * cexp (value e^{i freq x}), sum (of terms).
 */
struct RealFn {
    std::string kind = "constant";
    cplx value{1.0, 0.0};
    double lo = 0.0, hi = 0.0;
    double center = 0.0, width = 1.0;
    double freq = 0.0;
    std::vector<RealFn> terms;

    static RealFn constant(cplx v) { return {.kind = "constant", .value = v, .terms = {}}; }
    static RealFn indicator(double a, double b, cplx v = 1.0) { return {.kind = "indicator", .value = v, .lo = a, .hi = b, .terms = {}}; }
    static RealFn sign(cplx v = 1.0) { return {.kind = "sign", .value = v, .terms = {}}; }
    static RealFn gaussian(double c, double w, cplx v = 1.0) { return {.kind = "gaussian", .value = v, .center = c, .width = w, .terms = {}}; }
    static RealFn rational(double c = 0.0, double w = 1.0, cplx v = 1.0) {
        return {.kind = "rational", .value = v, .center = c, .width = w, .terms = {}};
    }
    static RealFn cexp(double f, cplx v = 1.0) { return {.kind = "cexp", .value = v, .freq = f, .terms = {}}; }
    static RealFn sum(std::vector<RealFn> ts) { return {.kind = "sum", .value = 1.0, .terms = std::move(ts)}; }

    cplx operator()(double x) const {
        if (kind == "constant") return value;
        if (kind == "indicator") return (x >= lo && x <= hi) ? value : cplx{};
        if (kind == "sign") return x > 0 ? value : (x < 0 ? -value : cplx{});
        if (kind == "gaussian") {
            double t = (x - center) / width;
            return value * std::exp(-0.5 * t * t);
        }
        if (kind == "rational") {
            double t = (x - center) / width;
            return value / (1.0 + t * t);
        }
        if (kind == "cexp") return value * std::polar(1.0, freq * x);
        if (kind == "sum") {
            cplx s{};
            for (const auto& t : terms) s += t(x);
            return s;
        }
        throw SpecError("unknown expression kind: " + kind);
    }

    std::vector<double> breakpoints() const {
        if (kind == "indicator") return {lo, hi};
        if (kind == "sign") return {0.0};
        std::vector<double> b;
        if (kind == "sum")
            for (const auto& t : terms) {
                auto tb = t.breakpoints();
                b.insert(b.end(), tb.begin(), tb.end());
            }
        return b;
    }

    /// Compact support [lo, hi], or an empty optional-like flag.
    bool compact(double& a, double& b) const {
        if (kind == "indicator") {
            a = lo;
            b = hi;
            return true;
        }
        if (kind == "sum" && !terms.empty()) {
            a = std::numeric_limits<double>::infinity();
            b = -a;
            for (const auto& t : terms) {
                double ta, tb;
                if (!t.compact(ta, tb)) return false;
                a = std::min(a, ta);
                b = std::max(b, tb);
            }
            return true;
        }
        return false;
    }

    /// Declared L^1 norm (+inf when not integrable).
    double l1_norm() const {
        const double inf = std::numeric_limits<double>::infinity();
        if (kind == "indicator") return std::abs(value) * std::max(0.0, hi - lo);
        if (kind == "gaussian") return std::abs(value) * width * std::sqrt(2.0 * std::numbers::pi);
        if (kind == "rational") return std::abs(value) * width * std::numbers::pi;
        if (kind == "sum") {
            double s = 0.0;
            for (const auto& t : terms) s += t.l1_norm();
            return s;
        }
        return (kind == "constant" && value == cplx{}) ? 0.0 : inf;
    }

    /// Jumps (x, m(x+) - m(x-)) of a piecewise-constant function.
    std::vector<std::pair<double, cplx>> jumps() const {
        if (kind == "indicator") return {{lo, value}, {hi, -value}};
        if (kind == "sign") return {{0.0, 2.0 * value}};
        std::vector<std::pair<double, cplx>> out;
        if (kind == "sum")
            for (const auto& t : terms) {
                auto tj = t.jumps();
                out.insert(out.end(), tj.begin(), tj.end());
            }
        return out;
    }

    bool piecewise_constant() const {
        if (kind == "constant" || kind == "indicator" || kind == "sign") return true;
        if (kind != "sum") return false;
        for (const auto& t : terms)
            if (!t.piecewise_constant()) return false;
        return true;
    }

    double sup_abs() const {
        if (kind == "sum") {
            double s = 0.0;
            for (const auto& t : terms) s += t.sup_abs();
            return s;
        }
        return std::abs(value);
    }
};

// ---------------------------------------------------------------------------
// Special functions

/// A(z) = int_0^z e^{u^2} du = sum z^{2k+1} / (k! (2k+1)).
inline cplx erf_antiderivative(cplx z) {
    const double az2 = std::norm(z);
    if (az2 < 600.0) {
        cplx z2 = z * z, pw = z, s = z;
        double maxt = std::abs(z);
        for (int k = 1; k < 2000; ++k) {
            pw *= z2 / static_cast<double>(k);
            cplx t = pw / static_cast<double>(2 * k + 1);
            s += t;
            double at = std::abs(t);
            maxt = std::max(maxt, at);
            // stop once the tail is 60 nats below the largest term
            if (k > az2 && at < maxt * std::exp(-60.0)) break;
        }
        if (std::abs(s) >= 1e-6 * maxt || maxt < 1e6) return s;
    }
    // Cancellation regime: z int_0^1 e^{z^2 t^2} dt by composite Gauss-Legendre.
    cplx z2 = z * z;
    const int panels = 64 + static_cast<int>(4.0 * az2);
    cplx acc = line_integral([&](double t) { return std::exp(z2 * t * t); }, 0.0, 1.0, {}, 16, 1.0 / panels);
    return z * acc;
}

inline cplx sinc_direct(cplx z) { return std::sin(z) / z; }

inline cplx sinc_series(cplx z) {
    cplx z2 = z * z;
    return 1.0 + z2 * (-1.0 / 6.0 + z2 * (1.0 / 120.0 + z2 * (-1.0 / 5040.0 + z2 * (1.0 / 362880.0 - z2 / 39916800.0))));
}

inline cplx sinc(cplx z) { return std::abs(z) < 1e-2 ? sinc_series(z) : sinc_direct(z); }

// ---------------------------------------------------------------------------
// Symbols phi

/**
 * @brief Symbol phi of the convolution-type operator S_phi.
 *
 * Closed forms on C^n are products over coordinates of the scalar form.
 * reflect_conj turns phi into psi(z) = conj(phi(-conj z)).
 */
struct PhiSpec {
    enum class Kind { closed_form, multiplier, density };
    Kind kind = Kind::closed_form;
    std::string name = "one";  ///< one | exponential | sinc_beta | erf_antiderivative
    cplx a{0.0, 0.0};          ///< exponential rate
    int beta = 4;              ///< sinc_beta power
    cplx coef{1.0, 0.0};       ///< erf_antiderivative: coef * A(scale z)
    double scale = 1.0;
    RealFn fn;                 ///< m or g
    bool reflect_conj = false;

    static PhiSpec one() { return {}; }
    static PhiSpec exponential(cplx rate) {
        PhiSpec p;
        p.name = "exponential";
        p.a = rate;
        return p;
    }
    static PhiSpec sinc_beta(int b) {
        if (b < 3) throw SpecError("sinc_beta requires beta >= 3");
        PhiSpec p;
        p.name = "sinc_beta";
        p.beta = b;
        return p;
    }
    static PhiSpec erf_antiderivative(cplx c = 1.0, double s = 1.0) {
        PhiSpec p;
        p.name = "erf_antiderivative";
        p.coef = c;
        p.scale = s;
        return p;
    }
    /// Symbol of the multiplier m(x) = -i sgn(x): 2 sqrt(2) A(z / sqrt(2)).
    static PhiSpec hilbert() { return erf_antiderivative(2.0 * std::sqrt(2.0), 1.0 / std::sqrt(2.0)); }
    static PhiSpec from_multiplier(RealFn m) {
        PhiSpec p;
        p.kind = Kind::multiplier;
        p.fn = std::move(m);
        return p;
    }
    static PhiSpec from_density(RealFn g) {
        if (!std::isfinite(g.l1_norm())) throw SpecError("density must have finite L1 norm");
        PhiSpec p;
        p.kind = Kind::density;
        p.fn = std::move(g);
        return p;
    }

    PhiSpec adjoint() const {
        PhiSpec p = *this;
        p.reflect_conj = !reflect_conj;
        return p;
    }
};

inline double default_panel(double freq) { return std::min(1.0, 3.0 / std::max(std::abs(freq), 1e-12)); }

namespace detail {

/**
 * phi for piecewise-constant m at large |Re z| = |a|. With u = x + Im z,
 * phi = e^{a^2/2} [sqrt(2 pi) e^{-a^2/2} m(-Im z) + sum_jumps J R(u_j)],
 * R(u) = -e^{-u^2/2 + i a u} sum_k (-1)^k (2k-1)!! / (ia - u)^{2k+1}.
 */
inline LogComplex piecewise_multiplier_phi(const RealFn& m, cplx z) {
    const double a = z.real(), b = z.imag();
    LogSum acc;
    cplx centre = m(-b);
    if (centre != cplx{}) acc.add(LogComplex(-0.5 * a * a, 0.0) * LogComplex::from(std::sqrt(2.0 * std::numbers::pi) * centre));
    for (const auto& [x, jump] : m.jumps()) {
        if (jump == cplx{}) continue;
        const double u = x + b;
        const cplx d = cplx(-u, a);
        const cplx d2 = d * d;
        cplx term = 1.0 / d, S = term;
        for (int k = 1; k < 40; ++k) {
            term *= -(2.0 * k - 1.0) / d2;
            S += term;
            if (std::abs(term) < 1e-18 * std::abs(S)) break;
        }
        acc.add(LogComplex(-0.5 * u * u, a * u) * LogComplex::from(-jump * S));
    }
    return LogComplex(0.5 * a * a, 0.0) * acc.value();
}

}  // namespace detail

/// phi(z) = int m(x) e^{-(x - i z)^2 / 2} dx  (n = 1).
inline LogComplex multiplier_to_phi(const RealFn& m, cplx z, int order = 12) {
    const double a = z.real(), b = z.imag();
    if (std::abs(a) >= 30.0 && m.piecewise_constant()) return detail::piecewise_multiplier_phi(m, z);
    // -(x - iz)^2/2 = -(x+b)^2/2 + a^2/2 + i a (x+b)
    double lo = -b - 14.0, hi = -b + 14.0;
    double ca, cb;
    if (m.compact(ca, cb)) {
        lo = std::max(lo, ca);
        hi = std::min(hi, cb);
        if (!(hi > lo)) return LogComplex::zero();
    }
    cplx I = line_integral(
        [&](double x) {
            double u = x + b;
            return m(x) * std::exp(-0.5 * u * u) * std::polar(1.0, a * u);
        },
        lo, hi, m.breakpoints(), order, default_panel(a));
    if (!std::isfinite(I.real()) || !std::isfinite(I.imag())) throw QuadratureDiverged("multiplier integral not finite");
    return LogComplex(0.5 * a * a, 0.0) * LogComplex::from(I);
}

/// phi(z) = int g(s) e^{-s^2/2} e^{-s z} ds  (n = 1).
inline LogComplex density_to_phi(const RealFn& g, cplx z, int order = 12) {
    const double x = z.real(), y = z.imag();
    // -s^2/2 - s z = -(s+x)^2/2 + x^2/2 - i y s
    double lo = -x - 14.0, hi = -x + 14.0;
    double ca, cb;
    if (g.compact(ca, cb)) {
        lo = std::max(lo, ca);
        hi = std::min(hi, cb);
        if (!(hi > lo)) return LogComplex::zero();
    }
    cplx I = line_integral(
        [&](double s) {
            double u = s + x;
            return g(s) * std::exp(-0.5 * u * u) * std::polar(1.0, -y * s);
        },
        lo, hi, g.breakpoints(), order, default_panel(y));
    if (!std::isfinite(I.real()) || !std::isfinite(I.imag())) throw QuadratureDiverged("density integral not finite");
    return LogComplex(0.5 * x * x, 0.0) * LogComplex::from(I);
}

/// Catalog closed forms: one, exponential (rate a), sinc_beta, erf_antiderivative (= A).
inline LogComplex phi_catalog_eval(const std::string& name, cplx z, cplx a = 0.0, int beta = 4) {
    if (name == "one") return LogComplex::one();
    if (name == "exponential") return LogComplex::exp(a * z);
    if (name == "sinc_beta") {
        if (beta < 3) throw SpecError("sinc_beta requires beta >= 3");
        return LogComplex::exp(0.5 * z * z) * LogComplex::from(sinc(z)).pow(static_cast<double>(beta));
    }
    if (name == "erf_antiderivative") return LogComplex::from(erf_antiderivative(z));
    throw SpecError("unknown phi catalog entry: " + name);
}

inline LogComplex phi_scalar(const PhiSpec& s, cplx z) {
    switch (s.kind) {
        case PhiSpec::Kind::multiplier: return multiplier_to_phi(s.fn, z);
        case PhiSpec::Kind::density: return density_to_phi(s.fn, z);
        default: break;
    }
    if (s.name == "erf_antiderivative") return LogComplex::from(s.coef * erf_antiderivative(s.scale * z));
    return phi_catalog_eval(s.name, z, s.a, s.beta);
}

/// phi(z) for z in C^n (product over coordinates).
inline LogComplex phi_eval(const PhiSpec& s, const CPoint& z) {
    if (s.kind != PhiSpec::Kind::closed_form && z.n != 1) throw DimMismatch("multiplier and density symbols are one-dimensional");
    LogComplex r = LogComplex::one();
    for (int j = 0; j < z.n; ++j) {
        cplx zj = s.reflect_conj ? -std::conj(z[j]) : z[j];
        LogComplex v = phi_scalar(s, zj);
        r *= s.reflect_conj ? v.conj() : v;
    }
    return r;
}

inline LogComplex phi_eval(const PhiSpec& s, cplx z) { return phi_eval(s, CPoint::scalar(z)); }

}  // namespace focklab
