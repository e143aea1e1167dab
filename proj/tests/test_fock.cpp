#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "focklab/fock.hpp"

using namespace focklab;

namespace {

EntireFn one_fn() {
    return [](const CPoint&) { return LogComplex::one(); };
}

}  // namespace

TEST(Kernel, Values) {
    EXPECT_NEAR(kernel(CPoint::scalar(1.0), CPoint::scalar(1.0)).abs(), std::numbers::e, 1e-14);
    cplx ki = kernel(CPoint::scalar({0, 1}), CPoint::scalar({0, 1})).to_complex();
    EXPECT_NEAR(std::abs(ki - std::numbers::e), 0.0, 1e-14);
    EXPECT_NEAR(kernel_pairing(CPoint::scalar(1.0), CPoint::scalar({0, 1})).abs(), std::exp(-1.0), 1e-15);
    EXPECT_THROW(kernel(CPoint::scalar(1.0), CPoint{1.0, 2.0}), DimMismatch);
}

TEST(Kernel, NormalizedHasUnitNorm) {
    for (CPoint z : {CPoint::scalar({0.5, -1.0}), CPoint::scalar({2.0, 1.5})}) {
        auto k = [z](const CPoint& w) { return normalized_kernel(z, w); };
        IntegralVerdict v = fock_inner(k, k, 1);
        ASSERT_TRUE(v.converged());
        EXPECT_NEAR(v.value, 1.0, 1e-9);
    }
    CPoint z2{cplx(0.3, 0.2), cplx(-0.5, 0.1)};
    auto k2 = [z2](const CPoint& w) { return normalized_kernel(z2, w); };
    EXPECT_NEAR(fock_inner(k2, k2, 2).value, 1.0, 1e-9);
}

TEST(Kernel, ReproducingPairing) {
    CPoint u = CPoint::scalar({0.7, 0.1}), v = CPoint::scalar({-0.2, 0.9});
    auto ku = [u](const CPoint& w) { return normalized_kernel(u, w); };
    auto kv = [v](const CPoint& w) { return normalized_kernel(v, w); };
    cplx got = fock_inner(ku, kv, 1).complex_value();
    EXPECT_LT(std::abs(got - kernel_pairing(u, v).to_complex()), 1e-10);
}

TEST(UAction, Involution) {
    CPoint z = CPoint::scalar({1.2, -0.4});
    EntireFn f = [](const CPoint& w) { return LogComplex::exp(w[0] * w[0] * 0.3 + w[0]); };
    EntireFn uuf = u_transform(z, u_transform(z, f));
    for (cplx w : {cplx(0, 0), cplx(0.5, 0.5), cplx(-2, 1)})
        EXPECT_LT(std::abs(uuf(CPoint::scalar(w)).to_complex() - f(CPoint::scalar(w)).to_complex()), 1e-12);
    EXPECT_LT(std::abs(u_transform(z, u_transform(z, one_fn()))(CPoint::scalar(0.3)).to_complex() - 1.0), 1e-14);
}

TEST(UAction, OneMapsToKernel) {
    cplx got = u_action(CPoint::scalar(1.0), one_fn(), CPoint::scalar({0, 1})).to_complex();
    EXPECT_LT(std::abs(got - std::exp(cplx(-0.5, 1.0))), 1e-14);
}

TEST(UAction, Isometry) {
    EntireFn f = [](const CPoint& w) { return LogComplex::from(1.0 + 2.0 * w[0] - w[0] * w[0]); };
    double base = fock_norm(f, 1, {}).value;
    for (CPoint z : {CPoint::scalar({1.0, 0.0}), CPoint::scalar({-0.5, 1.5})})
        EXPECT_NEAR(fock_norm(u_transform(z, f), 1, {}).value, base, 1e-9 * base);
}

TEST(FockNorm, Monomials) {
    // ||z^k||^2 = k! in H^2(C, dmu)
    for (int k : {0, 1, 3, 6}) {
        EntireFn f = [k](const CPoint& w) { return LogComplex::from(std::pow(w[0], k)); };
        EXPECT_NEAR(fock_norm(f, 1, {}).value, std::sqrt(std::tgamma(k + 1.0)), 1e-9);
    }
}

TEST(FockNorm, GeneralP) {
    // F^p_alpha norm of 1 is 1; of K_a it is e^{alpha... } closed form e^{|a|^2 / (2 alpha)}
    FockParams prm{.alpha = 1.5, .p = 3.0};
    EXPECT_NEAR(fock_norm(one_fn(), 1, prm).value, 1.0, 1e-10);
    CPoint a = CPoint::scalar({0.6, -0.3});
    EntireFn K = [a](const CPoint& w) { return kernel(a, w); };
    EXPECT_NEAR(fock_norm(K, 1, prm).value, std::exp(a.norm2() / (2.0 * prm.alpha)), 1e-8);
    EXPECT_THROW(fock_norm(one_fn(), 1, {.alpha = 0.0, .p = 2.0}), ConfigError);
}

TEST(PointwiseBound, PassesAndDiverges) {
    EXPECT_TRUE(pointwise_bound_check(one_fn(), 1, {}).pass);
    EntireFn K1 = [](const CPoint& w) { return kernel(CPoint::scalar(1.0), w); };
    auto rep = pointwise_bound_check(K1, 1, {});
    EXPECT_TRUE(rep.pass);
    EXPECT_LE(rep.worst_log_ratio, 1e-9);
    EXPECT_FALSE(rep.samples.empty());
    EntireFn g = [](const CPoint& w) { return LogComplex::exp(w[0] * w[0]); };
    EXPECT_THROW(pointwise_bound_check(g, 1, {}), NormDiverged);
}

TEST(PointwiseBound, TwoDimensions) {
    CPoint a{cplx(0.5, 0.0), cplx(0.0, -0.5)};
    EntireFn K = [a](const CPoint& w) { return kernel(a, w); };
    EXPECT_TRUE(pointwise_bound_check(K, 2, {.alpha = 1.0, .p = 1.0}).pass);
}
