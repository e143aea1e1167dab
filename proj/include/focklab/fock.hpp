#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "cpoint.hpp"
#include "errors.hpp"
#include "log_complex.hpp"
#include "quadrature.hpp"

namespace focklab {

using EntireFn = std::function<LogComplex(const CPoint&)>;

struct FockParams {
    double alpha = 1.0;
    double p = 2.0;
    void validate() const {
        if (!(alpha > 0) || !(p > 0)) throw ConfigError("alpha and p must be positive");
    }
};

/// K_z(zeta) = e^{<zeta, z>}.
inline LogComplex kernel(const CPoint& z, const CPoint& zeta) { return LogComplex::exp(inner(zeta, z)); }

/// k_z(zeta) = e^{<zeta, z> - |z|^2/2}.
inline LogComplex normalized_kernel(const CPoint& z, const CPoint& zeta) {
    return LogComplex::exp(inner(zeta, z) - 0.5 * z.norm2());
}

/// <k_u, k_v> = e^{<v, u> - (|u|^2 + |v|^2)/2}.
inline LogComplex kernel_pairing(const CPoint& u, const CPoint& v) {
    return LogComplex::exp(inner(v, u) - 0.5 * (u.norm2() + v.norm2()));
}

/// (U_z f)(w) = f(z - w) k_z(w).
inline LogComplex u_action(const CPoint& z, const EntireFn& f, const CPoint& w) {
    CPoint::check(z, w);
    return f(z - w) * normalized_kernel(z, w);
}

inline EntireFn u_transform(const CPoint& z, EntireFn f) {
    return [z, f = std::move(f)](const CPoint& w) { return u_action(z, f, w); };
}

/// <f, g> in H^2(C^n, dmu) by Gauss-Hermite quadrature.
inline IntegralVerdict fock_inner(const EntireFn& f, const EntireFn& g, int n, const QuadratureConfig& cfg = {}) {
    const double lpi = -n * std::log(std::numbers::pi);
    return gauss_weighted_integral([&](const CPoint& w) { return f(w) * g(w).conj() * LogComplex(lpi, 0.0); }, n, -1.0,
                                   CPoint::zero(n), cfg);
}

/// ||f||_{F^p_alpha} with the normalisation (p alpha / 2 pi)^n.
inline IntegralVerdict fock_norm(const EntireFn& f, int n, const FockParams& prm, const QuadratureConfig& cfg = {}) {
    prm.validate();
    const double c = -prm.p * prm.alpha / 2.0;
    const double lc = n * std::log(prm.p * prm.alpha / (2.0 * std::numbers::pi));
    IntegralVerdict v = gauss_weighted_integral(
        [&](const CPoint& w) { return f(w).abs_pow(prm.p) * LogComplex(lc, 0.0); }, n, c, CPoint::zero(n), cfg);
    if (v.converged()) {
        v.result = v.result.abs_pow(1.0 / prm.p);
        v.value = v.result.abs();
    }
    return v;
}

struct PointwiseBoundReport {
    bool pass = false;
    double norm = 0.0;
    double worst_log_ratio = -std::numeric_limits<double>::infinity();  ///< max log(|f| / bound)
    std::vector<CPoint> samples;
};

inline std::vector<CPoint> seeded_disc_points(int n, int count, double radius, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<CPoint> pts;
    while (static_cast<int>(pts.size()) < count) {
        CPoint z(n);
        for (int j = 0; j < n; ++j) z[j] = cplx(u(rng), u(rng));
        if (z.norm() > 1.0) continue;
        pts.push_back(radius * z);
    }
    return pts;
}

/// Checks |f(z)| <= ||f||_{F^p_alpha} e^{alpha |z|^2 / 2} on a seeded grid.
inline PointwiseBoundReport pointwise_bound_check(const EntireFn& f, int n, const FockParams& prm,
                                                  const QuadratureConfig& cfg = {}, int count = 64,
                                                  double radius = 4.0, std::uint64_t seed = 7) {
    IntegralVerdict nv = fock_norm(f, n, prm, cfg);
    if (!nv.converged()) throw NormDiverged("F^p_alpha norm integral did not converge");
    PointwiseBoundReport rep;
    rep.norm = nv.value;
    rep.samples = seeded_disc_points(n, count, radius, seed);
    rep.samples.push_back(CPoint::zero(n));
    const double ln = std::log(rep.norm);
    for (const auto& z : rep.samples) {
        double r = f(z).log_mag - (ln + prm.alpha * z.norm2() / 2.0);
        rep.worst_log_ratio = std::max(rep.worst_log_ratio, r);
    }
    rep.pass = rep.worst_log_ratio <= 1e-9;
    return rep;
}

}  // namespace focklab
