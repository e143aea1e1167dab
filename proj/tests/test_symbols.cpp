#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "focklab/measures.hpp"
#include "focklab/symbols.hpp"

using namespace focklab;

namespace {

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(Multiplier, ConstantGivesOne) {
    RealFn m = RealFn::constant(1.0 / kSqrt2Pi);
    for (cplx z : {cplx(0, 0), cplx(1, 0), cplx(0, 1), cplx(1, 1)})
        EXPECT_LT(rel(multiplier_to_phi(m, z).to_complex(), 1.0), 1e-10) << z;
}

TEST(Multiplier, HilbertAgainstSeries) {
    RealFn m = RealFn::sign(cplx(0, -1));
    const std::pair<cplx, cplx> cases[] = {
        {{1, 0}, {2.38991532382045525632547077441, 0}},
        {{0, 1}, {0, 1.71124878378429760634660924056}},
        {{1, 1}, {1.18851187235378195933327188733, 2.42958507924730636656588158}},
        {{3, -2}, {4.00309047843355840410231589109, 3.07065249538132960464556096187}},
    };
    for (auto [z, want] : cases) {
        EXPECT_LT(rel(multiplier_to_phi(m, z).to_complex(), want), 1e-9) << z;
        EXPECT_LT(rel(phi_eval(PhiSpec::hilbert(), z).to_complex(), want), 1e-10) << z;
    }
    EXPECT_TRUE(multiplier_to_phi(m, 0.0).to_complex() == cplx(0.0) || multiplier_to_phi(m, 0.0).abs() < 1e-14);
    EXPECT_NEAR(multiplier_to_phi(m, 1.0).abs() / kSqrt2Pi, 0.9534, 1e-4);
}

TEST(Multiplier, ComplexExponential) {
    // m = e^{i xi x}: phi(z) = sqrt(2 pi) e^{-xi^2/2} e^{-xi z}
    for (double xi : {-1.0, 0.5, 2.0}) {
        RealFn m = RealFn::cexp(xi);
        for (cplx z : {cplx(0.3, -0.2), cplx(-1.5, 0.7), cplx(2.0, 1.0)}) {
            cplx want = kSqrt2Pi * std::exp(-0.5 * xi * xi - xi * z);
            EXPECT_LT(rel(multiplier_to_phi(m, z).to_complex(), want), 1e-10);
        }
    }
}

TEST(Multiplier, ModulatedConstantIsLogLinear) {
    const double a = 0.7;
    RealFn m = RealFn::cexp(-2.0 * a);
    LogComplex p0 = multiplier_to_phi(m, 0.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 6; ++k) {
        cplx z(u(rng), u(rng));
        LogComplex r = multiplier_to_phi(m, z) / p0;
        cplx lg(r.log_mag + r.log_lo, r.phase);
        cplx rate = 2.0 * a;
        EXPECT_NEAR(lg.real(), (rate * z).real(), 1e-9);
        EXPECT_NEAR(std::remainder(lg.imag() - (rate * z).imag(), 2 * std::numbers::pi), 0.0, 1e-9);
    }
}

TEST(Multiplier, Indicator) {
    RealFn m = RealFn::indicator(-1, 1);
    cplx want(1.95064215567444527621318571323, 0.289990570945391776788362541198);
    EXPECT_LT(rel(multiplier_to_phi(m, cplx(0.7, 0.3)).to_complex(), want), 1e-10);
}

TEST(Multiplier, PiecewiseFarField) {
    // erf closed form at 80 digits; magnitudes near e^{450} and beyond
    struct Case {
        cplx z;
        double log_abs, phase;
    };
    const Case ind[] = {{{30, 0.5}, 446.78193300574413777, -0.78105815440528821304},
                        {{-41.5, -1.25}, 857.34727597768846182, -0.70667503873485794567},
                        {{35, 3}, 606.94216415293174011, 2.3967638896160264281}};
    const Case flip[] = {{{30, 0.5}, 447.47508018630408308, 2.3605344991845050254},
                         {{-41.5, -1.25}, 858.04042315824840713, 2.4349176148549352928},
                         {{35, 3}, 607.63531133349168542, -0.74482876397376681035}};
    RealFn m = RealFn::indicator(-1, 1);
    RealFn s = RealFn::sum({RealFn::constant(1.0), RealFn::indicator(-1, 1, -2.0)});
    auto check = [](const LogComplex& v, const Case& c) {
        EXPECT_NEAR(v.log_mag + v.log_lo, c.log_abs, 1e-9) << c.z;
        EXPECT_NEAR(std::remainder(v.phase - c.phase, 2 * std::numbers::pi), 0.0, 1e-8) << c.z;
    };
    for (const auto& c : ind) check(multiplier_to_phi(m, c.z), c);
    for (const auto& c : flip) check(multiplier_to_phi(s, c.z), c);
}

TEST(Density, ZeroAndIndicator) {
    EXPECT_TRUE(density_to_phi(RealFn::constant(0.0), cplx(1, 2)).is_zero() ||
                density_to_phi(RealFn::constant(0.0), cplx(1, 2)).abs() == 0.0);
    EXPECT_NEAR(density_to_phi(RealFn::indicator(-1, 1, 0.5), 0.0).abs(), 0.85562439189214880317, 1e-12);
    cplx want(1.810653620081682669331807294, 0.108594776412566743669686191517);
    EXPECT_LT(rel(density_to_phi(RealFn::indicator(-1, 1), cplx(0.7, 0.3)).to_complex(), want), 1e-10);
}

TEST(Density, RejectsNonIntegrable) {
    EXPECT_THROW(PhiSpec::from_density(RealFn::constant(1.0)), SpecError);
    EXPECT_THROW(PhiSpec::from_density(RealFn::sign()), SpecError);
    EXPECT_NO_THROW(PhiSpec::from_density(RealFn::rational()));
}

TEST(Density, GaussianClosedForm) {
    const double tau = 0.8;
    const double B = 1.0 / (tau * tau) + 1.0;
    RealFn g = RealFn::gaussian(0.0, tau);
    for (cplx z : {cplx(0.4, 0.1), cplx(-2.0, 1.5), cplx(3.0, -3.0)}) {
        cplx want = std::sqrt(2.0 * std::numbers::pi / B) * std::exp(z * z / (2.0 * B));
        EXPECT_LT(rel(density_to_phi(g, z).to_complex(), want), 1e-10);
    }
}

TEST(Density, MatchesMultiplierRoute) {
    // g = e^{-s^2/(2 tau^2)} pairs with m(x) = tau e^{-tau^2 x^2 / 2}
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (double tau : {0.5, 1.0, 2.0}) {
        RealFn g = RealFn::gaussian(0.0, tau);
        RealFn m = RealFn::gaussian(0.0, 1.0 / tau, tau);
        for (int k = 0; k < 5; ++k) {
            cplx z(0.0, u(rng));
            EXPECT_LT(rel(density_to_phi(g, z).to_complex(), multiplier_to_phi(m, z).to_complex()), 1e-6);
        }
    }
}

TEST(Catalog, ErfAntiderivative) {
    EXPECT_EQ(erf_antiderivative(0.0), cplx(0.0));
    EXPECT_NEAR(std::abs(erf_antiderivative(1.0) - 1.46265174590718160880), 0.0, 1e-13);
    const std::pair<cplx, cplx> cases[] = {
        {{4, 3}, {-24.5930961000053208085740793162, -106.512947863478339364304094698}},
        {{6, 6}, {-0.0293687757692812961392104671908, 0.937303940889006396706305227579}},
        {{10, 1}, {2.46107212550671349639474256614e+41, 4.28814388568593189778071101135e+41}},
        {{0, 12}, {0.0, 0.886226925452758013649083741671}},
    };
    for (auto [z, want] : cases) EXPECT_LT(rel(erf_antiderivative(z), want), 1e-9) << z;
}

TEST(Catalog, SincBeta) {
    const double s = std::numbers::pi / 2;
    LogComplex v = phi_catalog_eval("sinc_beta", s, 0.0, 4);
    EXPECT_NEAR(v.abs(), std::exp(s * s / 2) / std::pow(s, 4), 1e-12);
    EXPECT_NEAR(v.abs(), 0.564039908056669493, 1e-12);
    EXPECT_THROW(PhiSpec::sinc_beta(2), SpecError);
    EXPECT_THROW(phi_catalog_eval("nope", 1.0), SpecError);
}

TEST(Catalog, SincSeriesAgreesWithDirect) {
    for (double r : {5e-3, 1e-2, 2e-2, 5e-2})
        for (int k = 0; k < 8; ++k) {
            cplx z = std::polar(r, 0.7 * k);
            EXPECT_LT(std::abs(sinc_series(z) - sinc_direct(z)), 1e-10);
        }
}

TEST(Catalog, AdjointReflectsAndConjugates) {
    PhiSpec p = PhiSpec::exponential(cplx(0.5, 0.2));
    cplx z(0.3, -1.1);
    cplx want = std::conj(phi_eval(p, -std::conj(z)).to_complex());
    EXPECT_LT(rel(phi_eval(p.adjoint(), z).to_complex(), want), 1e-14);
    EXPECT_LT(rel(phi_eval(p.adjoint().adjoint(), z).to_complex(), phi_eval(p, z).to_complex()), 1e-14);
}

TEST(Catalog, ProductOverCoordinates) {
    PhiSpec p = PhiSpec::exponential(0.5);
    CPoint z{cplx(0.2, 0.1), cplx(-1.0, 0.4)};
    EXPECT_LT(rel(phi_eval(p, z).to_complex(), std::exp(0.5 * (z[0] + z[1]))), 1e-14);
    EXPECT_THROW(phi_eval(PhiSpec::from_multiplier(RealFn::sign()), z), DimMismatch);
}

// ---------------------------------------------------------------------------

TEST(Carleson, Lebesgue) {
    auto rep = carleson_check(MeasureSpec::lebesgue(), 1.5);
    EXPECT_EQ(rep.verdict, Tri::pass);
    EXPECT_NEAR(rep.sup_estimate, std::numbers::pi * 2.25, 1e-12);
}

TEST(Carleson, ExponentialDensityFails) {
    auto rep = carleson_check(MeasureSpec::exp_abs(1.0), 1.0);
    EXPECT_EQ(rep.verdict, Tri::fail);
    EXPECT_NEAR(rep.witness.norm(), 12.0, 1e-12);
    // radial oracle: mass at |z| = R is about pi e^{R} for r = 1
    double m0 = ball_mass(MeasureSpec::exp_abs(1.0), CPoint::scalar(8.0), 1.0);
    double m1 = ball_mass(MeasureSpec::exp_abs(1.0), CPoint::scalar(10.0), 1.0);
    EXPECT_NEAR(std::log(m1 / m0), 2.0, 0.02);
}

TEST(Carleson, IntegerLattice) {
    for (double r : {1.0, 1.5, 2.5}) {
        auto rep = carleson_check(MeasureSpec::lattice(), r);
        EXPECT_EQ(rep.verdict, Tri::pass) << r;
        EXPECT_LE(rep.sup_estimate, (2 * r + 2) * (2 * r + 2));
    }
    EXPECT_THROW(carleson_check(MeasureSpec::lattice(), 0.0), ConfigError);
}

TEST(Toeplitz, LebesgueIsIdentity) {
    CPoint u = CPoint::scalar({0.4, -0.3}), v = CPoint::scalar({-0.8, 1.1});
    LogComplex got = toeplitz_pairing(MeasureSpec::lebesgue(), u, v);
    EXPECT_LT(rel(got.to_complex(), kernel_pairing(u, v).to_complex()), 1e-9);
}

TEST(Toeplitz, CovarianceDirac) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 4; ++k) {
        CPoint z = CPoint::scalar({u(rng), u(rng)});
        std::vector<CPoint> ws;
        for (int j = 0; j < 5; ++j) ws.push_back(CPoint::scalar({u(rng), u(rng)}));
        auto rep = toeplitz_covariance_check(MeasureSpec::dirac(CPoint::zero(1)), z, ws);
        EXPECT_LE(rep.max_abs_deviation, 1e-12);
        for (const auto& w : ws) {
            cplx lhs = (normalized_kernel(z, w) *
                        toeplitz_apply_kernel(MeasureSpec::dirac(CPoint::zero(1)), z, z - w))
                           .to_complex();
            cplx want = std::conj(kernel(w, z).to_complex()) * std::exp(-z.norm2());
            EXPECT_LT(std::abs(lhs - want), 1e-12);
        }
    }
}

TEST(Toeplitz, CovarianceLebesgue) {
    CPoint z = CPoint::scalar({0.6, -0.4});
    std::vector<CPoint> ws{CPoint::scalar({0.0, 0.0}), CPoint::scalar({1.0, 0.5}), CPoint::scalar({-0.7, -1.2})};
    EXPECT_LE(toeplitz_covariance_check(MeasureSpec::lebesgue(), z, ws).max_abs_deviation, 1e-8);
}

TEST(Toeplitz, CovarianceTwoPoints) {
    MeasureSpec nu;
    nu.kind = "discrete";
    nu.points = {CPoint::scalar(1.0), CPoint::scalar(-1.0)};
    nu.weights = {1.0, 1.0};
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int k = 0; k < 4; ++k) {
        CPoint z = CPoint::scalar({u(rng), u(rng)});
        std::vector<CPoint> ws{CPoint::scalar({u(rng), u(rng)}), CPoint::scalar({u(rng), u(rng)})};
        EXPECT_LE(toeplitz_covariance_check(nu, z, ws).max_abs_deviation, 1e-10);
    }
}

TEST(Measure, Validation) {
    MeasureSpec bad;
    bad.kind = "discrete";
    bad.points = {CPoint::scalar(0.0)};
    EXPECT_THROW(bad.validate(), SpecError);
    MeasureSpec unk;
    unk.kind = "fractal";
    EXPECT_THROW(unk.validate(), SpecError);
}
