#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "focklab/localization.hpp"

using namespace focklab;

namespace {

CPoint pt(double x, double y) { return CPoint::scalar({x, y}); }

std::vector<CPoint> seeded_points(int count, double scale, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<CPoint> out;
    for (int k = 0; k < count; ++k) out.push_back(pt(u(rng), u(rng)));
    return out;
}

}  // namespace

TEST(PLocalization, IdentityIsOne) {
    for (double p : {2.0, 3.0, 5.0})
        for (CPoint z : {pt(0, 0), pt(3, -2)}) EXPECT_NEAR(p_localization_integral(OperatorSpec::identity(), z, p).value, 1.0, 1e-12);
    // numerical path: Lebesgue Toeplitz operator equals the identity but has no closed-form envelope
    OperatorSpec leb = OperatorSpec::toeplitz(MeasureSpec::lebesgue());
    for (double p : {2.0, 3.0}) {
        IntegralVerdict v = p_localization_integral(leb, pt(1.5, -0.5), p);
        ASSERT_TRUE(v.converged());
        EXPECT_NEAR(v.value, 1.0, 1e-8);
    }
}

TEST(PLocalization, LeftSideMatchesRightSide) {
    std::vector<OperatorSpec> ops{OperatorSpec::identity(), OperatorSpec::translation(pt(1, 0)), OperatorSpec::dilation(0.5),
                                  OperatorSpec::affine1({0.3, 0.2})};
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> up(2.1, 3.5);
    auto zs = seeded_points(3, 1.5, 4);
    for (auto op : ops)
        for (bool adj : {false, true}) {
            op.adjoint = adj;
            for (const auto& z : zs) {
                double p = up(rng);
                IntegralVerdict lhs = p_localization_lhs(op, z, p);
                double rhs = p_localization_integral(op, z, p).value;
                ASSERT_TRUE(lhs.converged()) << op.name();
                EXPECT_NEAR(lhs.value / rhs, 1.0, 1e-6) << op.name() << " p=" << p;
            }
        }
}

TEST(PLocalization, NumericRightSideMatchesClosedForm) {
    // a Lebesgue density scaled by c gives c^p times the identity value
    OperatorSpec leb = OperatorSpec::toeplitz(MeasureSpec::lebesgue(1, 0.5));
    IntegralVerdict v = p_localization_integral(leb, pt(0.3, 0.9), 2.5);
    EXPECT_NEAR(v.value, std::pow(0.5, 2.5), 1e-8);
}

TEST(PLocalization, DilationClosedForm) {
    for (const auto& z : seeded_points(5, 1.5, 9)) {
        for (auto [r, p] : {std::pair{0.5, 2.5}, std::pair{0.25, 3.0}, std::pair{0.0, 2.2}}) {
            double want = dilation_plocalization_closed_form(r, p, z);
            EXPECT_NEAR(p_localization_integral(OperatorSpec::dilation(r), z, p).value / want, 1.0, 1e-12);
            EXPECT_NEAR(p_localization_lhs(OperatorSpec::dilation(r), z, p).value / want, 1.0, 1e-6);
        }
    }
}

TEST(PLocalization, TranslationIsZIndependent) {
    for (CPoint a : {pt(1, 0), pt(2, 1)})
        for (double p : {2.5, 3.0, 16.0}) {
            double base = p_localization_integral(OperatorSpec::translation(a), pt(0, 0), p).value;
            EXPECT_TRUE(std::isfinite(base));
            for (const auto& z : seeded_points(4, 6.0, 2))
                EXPECT_NEAR(p_localization_integral(OperatorSpec::translation(a), z, p).value / base, 1.0, 1e-10);
            // closed form e^{(p^2/4 - p/2)|a|^2}
            EXPECT_NEAR(std::log(base), (p * p / 4 - p / 2) * a.norm2(), 1e-9);
        }
}

TEST(PLocalization, SupVerdicts) {
    EXPECT_EQ(p_localization_sup(OperatorSpec::dilation(0.5), 2.5).kind, SupKind::bounded);
    EXPECT_EQ(p_localization_sup(OperatorSpec::dilation(0.5), 3.0).kind, SupKind::divergent);
    EXPECT_EQ(p_localization_sup(OperatorSpec::translation(pt(2, 1)), 6.0).kind, SupKind::bounded);
}

TEST(PLocalization, LatticeToeplitz) {
    OperatorSpec op = OperatorSpec::toeplitz(MeasureSpec::lattice());
    QuadratureConfig cfg;
    cfg.legendre_order = 8;
    cfg.panel_width = 1.5;
    auto rays = ray_directions(1, 3, 5);
    for (double p : {2.5, 3.5}) EXPECT_EQ(p_localization_sup(op, p, rays, {2, 3, 4, 5}, cfg).kind, SupKind::bounded);
}

// ---------------------------------------------------------------------------

TEST(WL, IdentityTail) {
    for (double r : {0.0, 2.0, 4.0, 8.0})
        for (CPoint z : {pt(0, 0), pt(5, -3)})
            EXPECT_NEAR(wl_tail(OperatorSpec::identity(), z, r) / (2 * std::numbers::pi * std::exp(-r * r / 2)), 1.0, 1e-8);
    EXPECT_NEAR(wl_tail(OperatorSpec::identity(), pt(0, 0), 2.0), 0.8503, 1e-4);
}

TEST(WL, ClosedFormMatchesQuadrature) {
    // Lebesgue Toeplitz runs through the numerical tail integrator
    OperatorSpec leb = OperatorSpec::toeplitz(MeasureSpec::lebesgue());
    for (double r : {0.0, 1.5, 3.0})
        EXPECT_NEAR(wl_tail(leb, pt(1, 2), r) / wl_tail(OperatorSpec::identity(), pt(1, 2), r), 1.0, 1e-7);
    // noncentral case: translation tail against a direct integral
    OperatorSpec tr = OperatorSpec::translation(pt(2, 1));
    double direct =
        tail_integral([&](const CPoint& w) { return LogComplex(pairing(tr, pt(0, 0), w).value.log_mag, 0.0); }, 1, pt(0, 0), 2.0, {})
            .value;
    EXPECT_NEAR(wl_tail(tr, pt(0, 0), 2.0) / direct, 1.0, 1e-7);
}

TEST(WL, Probe) {
    LabConfig cfg;
    EXPECT_EQ(wl_probe(OperatorSpec::identity(), cfg).verdict, WLVerdict::WL);
    EXPECT_EQ(wl_probe(OperatorSpec::translation(pt(2, 1)), cfg).verdict, WLVerdict::WL);
    EXPECT_EQ(wl_probe(OperatorSpec::affine1(std::polar(1.0, std::numbers::pi / 3)), cfg).verdict, WLVerdict::not_WL);
    EXPECT_EQ(wl_probe(OperatorSpec::dilation(0.5), cfg).verdict, WLVerdict::WL);
}

TEST(WL, HeavyTailDensity) {
    LabConfig cfg;
    OperatorSpec op = OperatorSpec::convolution(PhiSpec::from_density(RealFn::rational()));
    WLProbe w = wl_probe(op, cfg);
    EXPECT_EQ(w.verdict, WLVerdict::WL);
    // slow 1/r decay: at r = 8 the tail is still several percent of the total
    std::size_t i8 = 3;
    ASSERT_EQ(w.forward.r[i8], 8.0);
    double ratio = w.forward.sup_tail[i8] / w.forward.sup_tail[0];
    EXPECT_GT(ratio, 0.03);
    EXPECT_LT(ratio, 0.1);
}

// ---------------------------------------------------------------------------

TEST(Fits, Translation) {
    OperatorSpec op = OperatorSpec::translation(pt(1, 0));
    FitGrid g = FitGrid::standard(1);
    DecayFit xz = xz_decay_fit(op, g);
    EXPECT_TRUE(xz.pass);
    EXPECT_GT(xz.rate, 10.0);
    DecayFit sl = sl_gaussian_fit(op, g);
    EXPECT_TRUE(sl.pass);
    EXPECT_GE(sl.rate, 0.25);
    // bound holds on every sample
    for (std::size_t i = 0; i < sl.d.size(); ++i) EXPECT_LE(sl.log_M[i], sl.log_C - sl.rate * sl.d[i] * sl.d[i] + 1e-12);
}

TEST(Fits, TranslationInvariance) {
    OperatorSpec op = OperatorSpec::translation(pt(2, 1));
    FitGrid g = FitGrid::standard(1), h = g;
    for (auto& b : h.bases) b = b + pt(3, -4);
    auto a = decay_profile(op, g), b = decay_profile(op, h);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-6 * std::abs(a[i]) + 1e-12);
}

TEST(Fits, CompactDensity) {
    for (double A : {0.1, 0.25, 0.4}) {
        OperatorSpec op = OperatorSpec::convolution(PhiSpec::from_density(RealFn::indicator(-A, A)));
        DecayFit sl = sl_gaussian_fit(op, FitGrid::standard(1));
        EXPECT_GE(sl.rate, 0.5 - A - 0.02) << A;
        EXPECT_TRUE(sl.pass);
    }
}

TEST(Fits, SincSymbolIsXZButNotSL) {
    OperatorSpec op = OperatorSpec::convolution(PhiSpec::sinc_beta(4));
    FitGrid g = FitGrid::standard(1);
    DecayFit xz = xz_decay_fit(op, g);
    DecayFit sl = sl_gaussian_fit(op, g);
    EXPECT_TRUE(xz.pass) << xz.rate;
    EXPECT_FALSE(sl.pass) << sl.rate;
}

TEST(Fits, HeavyTailDensitySlope) {
    OperatorSpec op = OperatorSpec::convolution(PhiSpec::from_density(RealFn::rational()));
    FitGrid g;
    for (double d = 4.0; d <= 20.0 + 1e-9; d += 0.5) g.distances.push_back(d);
    g.directions = {pt(-1, 0)};
    g.bases = {pt(0, 0)};
    DecayFit xz = xz_decay_fit(op, g);
    EXPECT_NEAR(xz.rate, 2.0, 0.15);
    EXPECT_FALSE(xz.pass);
}

TEST(Fits, PowerLawExponentIsExact) {
    std::vector<double> d, two, three;
    for (double v = 1.0; v <= 12.0 + 1e-9; v += 0.5) {
        d.push_back(v);
        two.push_back(0.7 - 2 * std::log(v));
        three.push_back(0.7 - 3 * std::log(v));
    }
    DecayFit f2 = xz_fit_profile(d, two, 1, 0.25), f3 = xz_fit_profile(d, three, 1, 0.25);
    EXPECT_NEAR(f2.rate, 2.0, 1e-12);
    EXPECT_FALSE(f2.pass);
    EXPECT_NEAR(f3.rate, 3.0, 1e-12);
    EXPECT_TRUE(f3.pass);
    // C (1 + d)^{-beta} dominates every sample
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_LE(three[i], f3.log_C - f3.rate * std::log1p(d[i]) + 1e-12);
}

TEST(Fits, ProfileEdgeCases) {
    std::vector<double> d{1, 2, 3};
    EXPECT_THROW(xz_fit_profile(d, {0, -1, -2}, 1, 0.25), ConfigError);
    EXPECT_THROW(xz_fit_profile({0, 1, 2, 3}, {0, -1, -2, -3}, 1, 0.25), ConfigError);
    std::vector<double> d4{1, 2, 3, 4};
    double ninf = -std::numeric_limits<double>::infinity();
    DecayFit f = sl_fit_profile(d4, {0, -1, ninf, ninf}, 0.02);
    EXPECT_TRUE(f.pass);
}

// ---------------------------------------------------------------------------

TEST(Report, Identity) {
    LocalizationReport r = build_report(OperatorSpec::identity());
    for (const auto& pr : r.p_results) EXPECT_EQ(pr.kind, SupKind::bounded) << pr.p;
    EXPECT_TRUE(r.sl.pass);
    EXPECT_TRUE(r.xz.pass);
    EXPECT_EQ(r.wl.verdict, WLVerdict::WL);
    EXPECT_TRUE(r.invariants_ok);
    EXPECT_EQ(r.berezin_probe.verdict, Persistence::persists);
}

TEST(Report, DilationFlip) {
    LabConfig cfg;
    cfg.p_grid = {2.5, 2.65, 2.7, 3.0};
    LocalizationReport r = build_report(OperatorSpec::dilation(0.5), cfg);
    EXPECT_EQ(r.p_results[0].kind, SupKind::bounded);
    EXPECT_EQ(r.p_results[1].kind, SupKind::bounded);
    EXPECT_EQ(r.p_results[2].kind, SupKind::divergent);
    EXPECT_EQ(r.p_results[3].kind, SupKind::divergent);
    EXPECT_TRUE(r.invariants_ok);
}

TEST(Report, InclusionChain) {
    LocalizationReport r;
    r.sl.pass = true;
    r.xz.pass = false;
    EXPECT_FALSE(inclusion_chain_holds(r));
    r.xz.pass = true;
    r.wl.verdict = WLVerdict::not_WL;
    EXPECT_FALSE(inclusion_chain_holds(r));
    r.wl.verdict = WLVerdict::inconclusive;
    EXPECT_TRUE(inclusion_chain_holds(r));
}

// exact sup of the Gaussian envelope quadratic

TEST(EnvelopeSup, DilationClosedForm) {
    // sup_z log|<V_r k_z, k_{z+v}>| = -(1 - r)|v|^2 / 4, attained at z = -v/2
    for (double r : {0.0, 0.5, -0.3})
        for (CPoint v : {pt(1, 0), pt(-2, 3), pt(0.5, 0.5)}) {
            auto s = detail::envelope_sup_log(OperatorSpec::dilation(r), v);
            ASSERT_TRUE(s.has_value());
            EXPECT_NEAR(*s, -(1 - r) * dist2(v, CPoint::zero(1)) / 4, 1e-9) << r;
        }
}

TEST(EnvelopeSup, IdentityAndUnimodular) {
    CPoint v = pt(3, -1);
    EXPECT_NEAR(*detail::envelope_sup_log(OperatorSpec::identity(), v), -5.0, 1e-9);
    // |A| = 1 with A != 1: the pairing magnitude reaches 1 for every shift
    EXPECT_NEAR(*detail::envelope_sup_log(OperatorSpec::affine1({0, 1}), v), 0.0, 1e-9);
    EXPECT_FALSE(detail::envelope_sup_log(OperatorSpec::toeplitz(MeasureSpec::lattice()), v).has_value());
}

TEST(EnvelopeSup, DilationSlopeIsExact) {
    FitGrid g = FitGrid::standard(1);
    std::vector<double> lm = decay_profile(OperatorSpec::dilation(0.5), g);
    for (std::size_t i = 0; i < lm.size(); ++i) EXPECT_NEAR(lm[i], -0.125 * g.distances[i] * g.distances[i], 1e-9);
    DecayFit f = sl_fit_profile(g.distances, lm, 0.02);
    EXPECT_NEAR(f.rate, 0.125, 1e-9);
    EXPECT_TRUE(f.pass);
}

TEST(EnvelopeSup, UnimodularFailsAllDecayTests) {
    LocalizationReport r = build_report(OperatorSpec::affine1({0, 1}));
    EXPECT_FALSE(r.xz.pass);
    EXPECT_FALSE(r.sl.pass);
    EXPECT_NEAR(r.xz.rate, 0.0, 1e-9);
    EXPECT_EQ(r.wl.verdict, WLVerdict::not_WL);
    EXPECT_TRUE(r.invariants_ok);
}

TEST(Report, CarlesonGate) {
    EXPECT_THROW(build_report(OperatorSpec::toeplitz(MeasureSpec::exp_abs(1.0))), UnboundedOperator);
}
