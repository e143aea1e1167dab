#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cpoint.hpp"
#include "errors.hpp"
#include "fock.hpp"
#include "log_complex.hpp"
#include "measures.hpp"
#include "quadrature.hpp"
#include "svd.hpp"
#include "symbols.hpp"

namespace focklab {

/// Coefficients gamma_m of the lacunary diagonal operator.
struct GammaSpec {
    std::string kind = "constant";  ///< constant | geometric | list
    cplx value{1.0, 0.0};
    double ratio = 0.5;
    std::vector<cplx> list;
    cplx tail{0.0, 0.0};

    cplx at(int m) const {
        if (kind == "constant") return value;
        if (kind == "geometric") return value * std::pow(ratio, m);
        if (kind == "list") return m < static_cast<int>(list.size()) ? list[m] : tail;
        throw SpecError("unknown gamma kind: " + kind);
    }
    double sup_abs() const {
        if (kind == "constant") return std::abs(value);
        if (kind == "geometric") {
            if (std::abs(ratio) > 1.0) return std::numeric_limits<double>::infinity();
            return std::abs(value);
        }
        double s = std::abs(tail);
        for (auto g : list) s = std::max(s, std::abs(g));
        return s;
    }
    bool is_real() const {
        if (kind == "list") {
            for (auto g : list)
                if (g.imag() != 0.0) return false;
            return tail.imag() == 0.0;
        }
        return value.imag() == 0.0;
    }
};

enum class Family { identity, translation, dilation, affine, lacunary, convolution, toeplitz };

inline const char* to_string(Family f) {
    switch (f) {
        case Family::identity: return "identity";
        case Family::translation: return "translation";
        case Family::dilation: return "dilation";
        case Family::affine: return "affine_composition";
        case Family::lacunary: return "lacunary";
        case Family::convolution: return "convolution_symbol";
        default: return "toeplitz_measure";
    }
}

/**
 * @brief Catalogued operator on H^2(C^n, dmu).
 *
 * adjoint = true denotes T^*; its pairing is conj(<T k_w, k_z>).
 */
struct OperatorSpec {
    Family family = Family::identity;
    int n = 1;
    CPoint a;            ///< translation vector
    double r = 0.0;      ///< dilation parameter
    CMatrix A;           ///< affine composition z -> A z + B
    CPoint B;
    GammaSpec gamma;
    PhiSpec phi;
    MeasureSpec measure;
    bool adjoint = false;

    static OperatorSpec identity(int dim = 1) {
        OperatorSpec o;
        o.n = dim;
        return o;
    }
    static OperatorSpec translation(const CPoint& v) {
        OperatorSpec o;
        o.family = Family::translation;
        o.n = v.n;
        o.a = v;
        return o;
    }
    static OperatorSpec dilation(double rr) {
        OperatorSpec o;
        o.family = Family::dilation;
        o.r = rr;
        return o;
    }
    static OperatorSpec affine(const CMatrix& M, const CPoint& b) {
        OperatorSpec o;
        o.family = Family::affine;
        o.n = b.n;
        o.A = M;
        o.B = b;
        return o;
    }
    static OperatorSpec affine1(cplx aa, cplx bb = 0.0) {
        CMatrix M(1, 1);
        M(0, 0) = aa;
        return affine(M, CPoint::scalar(bb));
    }
    static OperatorSpec lacunary(GammaSpec g) {
        OperatorSpec o;
        o.family = Family::lacunary;
        o.gamma = std::move(g);
        return o;
    }
    static OperatorSpec convolution(PhiSpec p, int dim = 1) {
        OperatorSpec o;
        o.family = Family::convolution;
        o.n = dim;
        o.phi = std::move(p);
        return o;
    }
    static OperatorSpec toeplitz(MeasureSpec m) {
        OperatorSpec o;
        o.family = Family::toeplitz;
        o.n = m.n;
        o.measure = std::move(m);
        return o;
    }

    /// Matrix and shift of the composition symbol (dilation is A = -r I).
    CMatrix matrix() const {
        if (family == Family::dilation) return CMatrix::Identity(1, 1) * cplx(-r, 0.0);
        return A;
    }
    CPoint shift() const { return family == Family::dilation ? CPoint::zero(1) : B; }
    bool is_composition() const { return family == Family::affine || family == Family::dilation; }

    std::string name() const { return std::string(to_string(family)) + (adjoint ? "*" : ""); }

    void validate() const;
};

struct PairingValue {
    enum class Method { closed_form, quadrature };
    LogComplex value;
    Method method = Method::closed_form;
    double est_rel_err = 0.0;
};

// ---------------------------------------------------------------------------
// Boundedness of composition operators

struct GateResult {
    bool bounded = true;
    std::optional<CPoint> witness;
    std::string reason;
};

/**
 * @brief C_phi, phi(z) = A z + B, is bounded iff ||A|| <= 1 and <A zeta, B> = 0
 * whenever |A zeta| = |zeta|.
 */
inline GateResult boundedness_gate(const CMatrix& A, const CPoint& B) {
    if (A.rows() != A.cols() || A.rows() != B.n) throw DimMismatch("A must be n x n with B in C^n");
    SvdResult s = complex_svd_small(A);
    const int n = B.n;
    GateResult g;
    CMatrix Wh = s.W.adjoint();
    auto right = [&](int j) { return CPoint::from_vector(Wh.col(j)); };
    if (s.sigma(0) > 1.0 + 1e-12) {
        g.bounded = false;
        g.witness = right(0);
        g.reason = "norm of A exceeds 1";
        return g;
    }
    const double tol = 1e-10 * (1.0 + B.norm());
    for (int j = 0; j < n; ++j) {
        if (s.sigma(j) < 1.0 - 1e-10) break;
        CPoint zeta = right(j);
        if (std::abs(inner(apply_matrix(A, zeta), B)) > tol) {
            g.bounded = false;
            g.witness = zeta;
            g.reason = "<A zeta, B> != 0 on the unit singular subspace";
            return g;
        }
    }
    return g;
}

inline void OperatorSpec::validate() const {
    switch (family) {
        case Family::identity: break;
        case Family::translation:
            if (a.n != n || !a.finite()) throw SpecError("translation vector must be finite and match n");
            break;
        case Family::dilation:
            if (!(r >= 0.0 && r < 1.0)) throw SpecError("dilation parameter must lie in [0, 1)");
            if (n != 1) throw DimMismatch("dilation is one-dimensional");
            break;
        case Family::affine: {
            if (A.rows() != n || A.cols() != n || B.n != n) throw DimMismatch("affine composition dimensions");
            GateResult g = boundedness_gate(A, B);
            if (!g.bounded) throw UnboundedOperator("composition operator is unbounded: " + g.reason);
            break;
        }
        case Family::lacunary:
            if (n != 1) throw DimMismatch("lacunary operator is one-dimensional");
            if (!std::isfinite(gamma.sup_abs())) throw SpecError("gamma must be bounded");
            break;
        case Family::convolution:
            if (phi.kind != PhiSpec::Kind::closed_form && n != 1) throw DimMismatch("multiplier symbols need n = 1");
            break;
        case Family::toeplitz:
            measure.validate();
            if (measure.n != n) throw DimMismatch("measure dimension");
            break;
    }
}

// ---------------------------------------------------------------------------
// Operator action on normalised kernels, (T k_z)(zeta), evaluated from the
// definition of each family.

/// S_phi k_z (zeta) = int k_z(u) e^{<zeta, u>} phi(zeta - conj u) dmu(u).
inline IntegralVerdict convolution_apply_kernel(const PhiSpec& phi, const CPoint& z, const CPoint& zeta,
                                                const QuadratureConfig& cfg = {}) {
    const int n = z.n;
    const CPoint c = 0.5 * (z + zeta);
    const double lpi = -n * std::log(std::numbers::pi);
    return gauss_weighted_integral(
        [&](const CPoint& u) {
            return normalized_kernel(z, u) * LogComplex::exp(inner(zeta, u)) * phi_eval(phi, zeta - u.conj()) *
                   LogComplex(-u.norm2() + dist2(u, c) + lpi, 0.0);
        },
        n, -1.0, c, cfg);
}

/// Lacunary series e^{-(|z|^2 + |w|^2)/2} sum_m gamma_m x^N y^N / N!, N = 2^m, in log domain.
inline LogComplex lacunary_series(const GammaSpec& g, cplx x, cplx y, double log_prefactor) {
    if (x == 0.0 || y == 0.0) return LogComplex::zero();
    LogComplex xy = LogComplex::from(x * y);
    LogSum s;
    double best = -std::numeric_limits<double>::infinity();
    for (int m = 0; m <= 60; ++m) {
        double N = std::ldexp(1.0, m);
        cplx gm = g.at(m);
        double lt = N * xy.log_mag - std::lgamma(N + 1.0);
        best = std::max(best, lt);
        if (gm != 0.0) {
            LogComplex t(lt + log_prefactor, std::fmod(N * xy.phase, 2.0 * std::numbers::pi));
            s.add(t * LogComplex::from(gm));
        }
        // terms decrease once N exceeds |xy|
        if (N > std::abs(x * y) && lt < best - 60.0) break;
    }
    return s.value();
}

inline LogComplex apply_to_kernel(const OperatorSpec& op, const CPoint& z, const CPoint& zeta,
                                  const QuadratureConfig& cfg = {}) {
    if (op.adjoint) throw SpecError("apply_to_kernel expects a non-adjoint operator");
    CPoint::check(z, zeta);
    switch (op.family) {
        case Family::identity: return normalized_kernel(z, zeta);
        case Family::translation: return normalized_kernel(z, zeta - op.a) * normalized_kernel(op.a, zeta);
        case Family::dilation:
        case Family::affine: return normalized_kernel(z, apply_matrix(op.matrix(), zeta) + op.shift());
        case Family::lacunary: return lacunary_series(op.gamma, std::conj(z[0]), zeta[0], -0.5 * z.norm2());
        case Family::convolution: return convolution_apply_kernel(op.phi, z, zeta, cfg).result;
        case Family::toeplitz: return toeplitz_apply_kernel(op.measure, z, zeta, cfg);
    }
    return {};
}

// ---------------------------------------------------------------------------
// Pairings

inline PairingValue pairing_forward(const OperatorSpec& op, const CPoint& z, const CPoint& w,
                                    const QuadratureConfig& cfg) {
    PairingValue pv;
    const double half = -0.5 * (z.norm2() + w.norm2());
    switch (op.family) {
        case Family::identity: pv.value = kernel_pairing(z, w); break;
        case Family::translation:
            // V_a k_z = e^{-i Im<a, z>}-weighted k_{z+a}
            pv.value = LogComplex::exp(inner(w, z + op.a) - inner(op.a, z) + half - 0.5 * op.a.norm2());
            break;
        case Family::dilation:
        case Family::affine: pv.value = LogComplex::exp(inner(apply_matrix(op.matrix(), w) + op.shift(), z) + half); break;
        case Family::lacunary: pv.value = lacunary_series(op.gamma, std::conj(z[0]), w[0], half); break;
        case Family::convolution:
            pv.value = LogComplex::exp(inner(w, z) + half) * phi_eval(op.phi, w - z.conj());
            break;
        case Family::toeplitz:
            if (op.measure.kind == "density" && op.measure.density == "constant") {
                // c pi^{-n} dV reproduces c <k_z, k_w>
                pv.value = kernel_pairing(z, w) * LogComplex::from(op.measure.value);
                break;
            }
            pv.method = PairingValue::Method::quadrature;
            pv.value = toeplitz_pairing(op.measure, z, w, cfg, &pv.est_rel_err);
            if (op.measure.kind != "density") pv.method = PairingValue::Method::closed_form;
            break;
    }
    return pv;
}

/// <T k_z, k_w>.
inline PairingValue pairing(const OperatorSpec& op, const CPoint& z, const CPoint& w, const QuadratureConfig& cfg = {}) {
    CPoint::check(z, w);
    if (z.n != op.n) throw DimMismatch("point dimension does not match operator");
    if (!z.finite() || !w.finite()) throw NonFiniteSample("non-finite pairing argument");
    op.validate();
    if (!op.adjoint) return pairing_forward(op, z, w, cfg);
    PairingValue pv = pairing_forward(op, w, z, cfg);
    pv.value = pv.value.conj();
    return pv;
}

inline LogComplex berezin(const OperatorSpec& op, const CPoint& z, const QuadratureConfig& cfg = {}) {
    if (!op.adjoint && op.is_composition()) {
        op.validate();
        // e^{-|z|^2} e^{<A z + B, z>}
        return LogComplex::exp(inner(apply_matrix(op.matrix(), z) + op.shift(), z) - z.norm2());
    }
    if (!op.adjoint && op.family == Family::convolution) {
        op.validate();
        return phi_eval(op.phi, z - z.conj());
    }
    return pairing(op, z, z, cfg).value;
}

/// Catalogued adjoint: V_a^* = V_{-a}; S_phi^* = S_psi with psi(z) = conj(phi(-conj z));
/// T_nu^* = T_{conj nu}; real lacunary and dilations are self-adjoint. Otherwise the adjoint flag.
inline OperatorSpec adjoint_spec(const OperatorSpec& op) {
    OperatorSpec o = op;
    if (op.adjoint) {
        o.adjoint = false;
        return o;
    }
    switch (op.family) {
        case Family::identity:
        case Family::dilation: return o;
        case Family::translation: o.a = -op.a; return o;
        case Family::convolution: o.phi = op.phi.adjoint(); return o;
        case Family::toeplitz:
            if (op.measure.kind == "discrete") {
                for (auto& wgt : o.measure.weights) wgt = std::conj(wgt);
                return o;
            }
            o.measure.value = std::conj(op.measure.value);
            return o;
        case Family::lacunary:
            if (op.gamma.is_real()) return o;
            break;
        case Family::affine: break;
    }
    o.adjoint = true;
    return o;
}

/**
 * @brief |<T k_z, k_w>| = amp e^{-|w - m|^2 / 2} for the Gaussian families.
 */
struct GaussianEnvelope {
    CPoint m;
    double log_amp = 0.0;
};

inline std::optional<GaussianEnvelope> gaussian_envelope(const OperatorSpec& op, const CPoint& z) {
    switch (op.family) {
        case Family::identity: return GaussianEnvelope{z, 0.0};
        case Family::translation: return GaussianEnvelope{op.adjoint ? z - op.a : z + op.a, 0.0};
        case Family::dilation:
        case Family::affine: {
            CMatrix M = op.matrix();
            CPoint b = op.shift();
            if (!op.adjoint) {
                CPoint m = apply_matrix(M.adjoint(), z);
                return GaussianEnvelope{m, 0.5 * (m.norm2() - z.norm2()) + inner(b, z).real()};
            }
            CPoint m = apply_matrix(M, z) + b;
            return GaussianEnvelope{m, 0.5 * (m.norm2() - z.norm2())};
        }
        case Family::convolution: {
            // phi = e^{a . z}: |pairing| = e^{|a|^2/2 - 2 Im(a) . Im(z)} e^{-|w - z - conj a|^2/2}
            const PhiSpec& f = op.phi;
            if (op.adjoint || f.kind != PhiSpec::Kind::closed_form || (f.name != "one" && f.name != "exponential"))
                return std::nullopt;
            cplx rate = f.name == "one" ? cplx{} : (f.reflect_conj ? -std::conj(f.a) : f.a);
            CPoint m = z;
            double amp = 0.0;
            for (int j = 0; j < z.n; ++j) {
                m[j] += std::conj(rate);
                amp += 0.5 * std::norm(rate) - 2.0 * rate.imag() * z[j].imag();
            }
            return GaussianEnvelope{m, amp};
        }
        default: return std::nullopt;
    }
}

// ---------------------------------------------------------------------------

enum class Persistence { vanishes, persists, inconclusive };

inline const char* to_string(Persistence p) {
    switch (p) {
        case Persistence::vanishes: return "vanishes";
        case Persistence::persists: return "persists";
        default: return "inconclusive";
    }
}

struct VanishProbe {
    Persistence verdict = Persistence::inconclusive;
    int witness_ray = -1;
    std::vector<RaySample> samples;  ///< log |berezin|
};

/**
 * @brief Samples |T~| along rays. persists: some ray keeps |T~| >= 1e-3 at every
 * radius. vanishes: every ray ends below 1e-3 and is non-increasing over the last
 * two radii.
 */
inline VanishProbe berezin_vanish_probe(const OperatorSpec& op, std::vector<CPoint> rays = {},
                                        std::vector<double> ladder = {}, const QuadratureConfig& cfg = {}) {
    op.validate();
    if (rays.empty()) rays = default_rays(op.n);
    if (ladder.empty()) ladder = cfg.radius_ladder;
    if (ladder.size() < 2) throw ConfigError("ladder needs at least two radii");
    const double floor = std::log(1e-3);
    VanishProbe out;
    bool all_vanish = true;
    for (std::size_t j = 0; j < rays.size(); ++j) {
        std::vector<double> L;
        for (double R : ladder) {
            double v = berezin(op, R * rays[j], cfg).log_mag;
            L.push_back(v);
            out.samples.push_back({static_cast<int>(j), R, v});
        }
        bool stays = true;
        for (double v : L) stays = stays && v >= floor;
        if (stays && out.witness_ray < 0) out.witness_ray = static_cast<int>(j);
        std::size_t m = L.size();
        if (!(L[m - 1] < floor && L[m - 1] <= L[m - 2])) all_vanish = false;
    }
    if (out.witness_ray >= 0)
        out.verdict = Persistence::persists;
    else if (all_vanish)
        out.verdict = Persistence::vanishes;
    return out;
}

/// F(t) = e^{-t} sum_m t^{2^m} / (2^m)!.
inline double lacunary_F(double t, double tol = 1e-17) {
    if (t < 0) throw ConfigError("lacunary_F needs t >= 0");
    if (t == 0.0) return 0.0;
    LogSum s;
    double best = -std::numeric_limits<double>::infinity();
    const double lt = std::log(t);
    for (int m = 0; m <= 60; ++m) {
        double N = std::ldexp(1.0, m);
        double l = N * lt - std::lgamma(N + 1.0) - t;
        best = std::max(best, l);
        s.add(LogComplex(l, 0.0));
        if (N > t && l < best + std::log(tol)) break;
    }
    return s.value().abs();
}

/// Closed form of int |U_z T_r U_z 1|^p dmu for the dilation T_r f(z) = f(-r z).
inline double dilation_plocalization_closed_form(double r, double p, const CPoint& z) {
    if (!(r >= 0 && r < 1) || !(p > 0)) throw ConfigError("need r in [0,1) and p > 0");
    return std::exp(-p * (1 + r) * z.norm2() * (1 - (1 + r) * p / 4));
}

/// Exponent E with int |U_z C_phi U_z 1|^p dmu = e^E, phi(z) = A z + B.
inline double composition_exponent_g(const CMatrix& A, const CPoint& B, const CPoint& z, double p) {
    GateResult g = boundedness_gate(A, B);
    if (!g.bounded) throw UnboundedOperator("composition operator is unbounded: " + g.reason);
    CPoint As = apply_matrix(A.adjoint(), z);
    return p * (p / 4 - 1) * z.norm2() + inner(z, p * B - p * (p / 2 - 1) * As).real() + p * p / 4 * As.norm2();
}

// ---------------------------------------------------------------------------

enum class LpVerdict { in_Lp, not_in_Lp, inconclusive };

inline const char* to_string(LpVerdict v) {
    switch (v) {
        case LpVerdict::in_Lp: return "in_Lp";
        case LpVerdict::not_in_Lp: return "not_in_Lp";
        default: return "inconclusive";
    }
}

struct LpCertificate {
    LpVerdict verdict = LpVerdict::inconclusive;
    std::string rule;
    std::optional<CPoint> witness;
    std::vector<double> witness_exponents;  ///< E(R witness) over the ladder
    std::optional<SupVerdict> evidence;
};

namespace detail {

inline bool near_identity(const CMatrix& M, double tol) { return (M - CMatrix::Identity(M.rows(), M.cols())).norm() <= tol; }

}  // namespace detail

/**
 * @brief Decides whether C_phi, phi(z) = A z + B, lies in L_p.
 *
 * Order: exact one-dimensional rule, ||A|| < 1, A = V Sigma V^*, block form of
 * WV with small singular values, non-block WV (witness), then a ray fallback.
 */
inline LpCertificate svd_localization_verdict(const CMatrix& A, const CPoint& B, double p, const QuadratureConfig& cfg = {}) {
    GateResult gate = boundedness_gate(A, B);
    if (!gate.bounded) throw UnboundedOperator("composition operator is unbounded: " + gate.reason);
    if (!(p > 0)) throw ConfigError("p must be positive");
    const int n = B.n;
    LpCertificate out;
    auto E = [&](const CPoint& z) { return composition_exponent_g(A, B, z, p); };
    auto witness_growth = [&](const CPoint& d) {
        std::vector<double> v;
        for (double R : cfg.radius_ladder) v.push_back(E(R * d));
        return v;
    };

    if (n == 1) {
        cplx a = A(0, 0), b = B[0];
        // E = Q |z|^2 + Re(z conj(p b)), Q = p ((p/4)|1-a|^2 - (1 - Re a))
        double Q = p * (p / 4 * std::norm(1.0 - a) - (1.0 - a.real()));
        out.rule = "one-dimensional quadratic exponent";
        if (std::abs(Q) <= 1e-12)
            out.verdict = std::abs(b) <= 1e-12 ? LpVerdict::in_Lp : LpVerdict::not_in_Lp;
        else
            out.verdict = Q < 0 ? LpVerdict::in_Lp : LpVerdict::not_in_Lp;
        return out;
    }

    SvdResult s = complex_svd_small(A);
    const double smax = s.sigma(0);
    if (smax < 1.0 - 1e-10 && p > 2 && p < 4 / (1 + smax)) {
        out.verdict = LpVerdict::in_Lp;
        out.rule = "||A|| < 1 and 2 < p < 4 / (1 + ||A||)";
        return out;
    }
    int j = 0;
    while (j < n && s.sigma(j) >= 1.0 - 1e-10) ++j;
    const double tol = 1e-9;
    if (p > 2 && p < 4 && detail::near_identity(s.W * s.V, tol)) {
        out.verdict = LpVerdict::in_Lp;
        out.rule = "A = V Sigma V^*, 2 < p < 4";
        return out;
    }
    CMatrix WV = s.W * s.V;
    bool block = j == 0 || (detail::near_identity(WV.topLeftCorner(j, j), tol) &&
                            WV.topRightCorner(j, n - j).norm() <= tol && WV.bottomLeftCorner(n - j, j).norm() <= tol);
    if (block) {
        double tail_max = j < n ? s.sigma(j) : 0.0;
        if (p > 2 && p < 4 && tail_max < (4 - p) / p) {
            out.verdict = LpVerdict::in_Lp;
            out.rule = "WV block form, max tail sigma < (4 - p) / p";
            return out;
        }
    } else if (p > 2) {
        // witness z = V xi, xi in the unit singular block
        double best = -std::numeric_limits<double>::infinity();
        for (int l = 0; l < j; ++l) {
            CPoint d = CPoint::from_vector(s.V.col(l));
            auto g = witness_growth(d);
            if (g.back() > best) {
                best = g.back();
                out.witness = d;
                out.witness_exponents = g;
            }
        }
        out.verdict = LpVerdict::not_in_Lp;
        out.rule = "WV not of block form";
        return out;
    }
    SupVerdict sv = classify_sup_over_rays(E, n, default_rays(n), cfg.radius_ladder);
    out.rule = "ray fallback on the exponent";
    out.verdict = sv.kind == SupKind::bounded     ? LpVerdict::in_Lp
                  : sv.kind == SupKind::divergent ? LpVerdict::not_in_Lp
                                                  : LpVerdict::inconclusive;
    if (sv.witness_ray >= 0) out.witness = default_rays(n)[sv.witness_ray];
    out.evidence = std::move(sv);
    return out;
}

}  // namespace focklab
