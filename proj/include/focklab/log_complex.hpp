#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace focklab {

using cplx = std::complex<double>;

inline double wrap_phase(double t) {
    if (!std::isfinite(t)) return 0.0;
    if (t > -std::numbers::pi && t <= std::numbers::pi) return t;
    double r = std::remainder(t, 2.0 * std::numbers::pi);
    if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
    return r;
}

/**
 * @brief Complex scalar stored as (log|x|, arg x).
 *
 * log_mag = -inf is the zero element. Products and powers never leave the
 * log domain, so factors such as e^{-720} survive until they cancel.
 */
class LogComplex {
public:
    double log_mag = -std::numeric_limits<double>::infinity();
    double phase = 0.0;
    /// Low-order correction to log_mag; keeps conversions exact near |log_mag| = 700.
    double log_lo = 0.0;

    constexpr LogComplex() = default;
    LogComplex(double lm, double ph) : log_mag(lm), phase(wrap_phase(ph)) {
        if (log_mag == -std::numeric_limits<double>::infinity()) phase = 0.0;
    }

    static LogComplex zero() { return {}; }
    static LogComplex one() { return {0.0, 0.0}; }

    /// e^{w} for complex w.
    static LogComplex exp(cplx w) { return {w.real(), w.imag()}; }

    static LogComplex from(cplx v) {
        double a = std::abs(v);
        if (a == 0.0) return {};
        long double l = std::log(static_cast<long double>(a));
        LogComplex r{static_cast<double>(l), std::arg(v)};
        r.log_lo = static_cast<double>(l - static_cast<long double>(r.log_mag));
        return r;
    }
    static LogComplex from_real(double v) { return from(cplx(v, 0.0)); }

    bool is_zero() const { return log_mag == -std::numeric_limits<double>::infinity(); }
    bool is_finite() const { return !std::isnan(log_mag) && log_mag != std::numeric_limits<double>::infinity() && std::isfinite(phase); }

    double abs() const {
        if (log_lo == 0.0) return std::exp(log_mag);
        return static_cast<double>(std::exp(static_cast<long double>(log_mag) + log_lo));
    }
    cplx to_complex() const {
        if (is_zero()) return {0.0, 0.0};
        return std::polar(abs(), phase);
    }

    LogComplex conj() const {
        if (is_zero()) return {};
        LogComplex r{log_mag, -phase};
        r.log_lo = log_lo;
        return r;
    }

    /// |x|^p as a LogComplex with zero phase.
    LogComplex abs_pow(double p) const {
        if (is_zero()) return {};
        return {p * log_mag, 0.0};
    }

    /// Principal power x^p (phase scaled by p).
    LogComplex pow(double p) const {
        if (is_zero()) return {};
        return {p * log_mag, p * phase};
    }

    friend LogComplex operator*(const LogComplex& a, const LogComplex& b) {
        if (a.is_zero() || b.is_zero()) return {};
        return with_sum(a.log_mag, b.log_mag, a.log_lo + b.log_lo, a.phase + b.phase);
    }
    friend LogComplex operator/(const LogComplex& a, const LogComplex& b) {
        if (a.is_zero()) return {};
        return with_sum(a.log_mag, -b.log_mag, a.log_lo - b.log_lo, a.phase - b.phase);
    }
    LogComplex& operator*=(const LogComplex& b) { return *this = *this * b; }

private:
    // Two-sum of the high parts; the rounding error joins the low part.
    static LogComplex with_sum(double x, double y, double lo, double ph) {
        double s = x + y;
        LogComplex r{s, ph};
        if (std::isfinite(s)) {
            double bb = s - x;
            double err = (x - (s - bb)) + (y - bb);
            r.log_lo = lo + err;
        }
        return r;
    }

public:

    friend LogComplex operator+(const LogComplex& a, const LogComplex& b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        const LogComplex& hi = a.log_mag >= b.log_mag ? a : b;
        const LogComplex& lo = a.log_mag >= b.log_mag ? b : a;
        cplx s = std::polar(1.0, hi.phase) + std::polar(std::exp(lo.log_mag - hi.log_mag), lo.phase);
        double m = std::abs(s);
        if (m == 0.0) return {};
        return {hi.log_mag + std::log(m), std::arg(s)};
    }
    friend LogComplex operator-(const LogComplex& a, const LogComplex& b) {
        if (b.is_zero()) return a;
        return a + LogComplex{b.log_mag, b.phase + std::numbers::pi};
    }
};

/**
 * @brief Sequential sum of LogComplex terms with a floating scale.
 *
 * The running total is kept as scale + complex mantissa; order of addition is
 * fixed by the caller, so results are bit-reproducible.
 */
class LogSum {
public:
    void add(const LogComplex& t) {
        if (t.is_zero()) return;
        if (!t.is_finite()) {
            bad_ = true;
            return;
        }
        if (scale_ == -std::numeric_limits<double>::infinity()) {
            scale_ = t.log_mag;
            acc_ = std::polar(std::exp(t.log_lo), t.phase);
            return;
        }
        if (t.log_mag > scale_) {
            acc_ *= std::exp(scale_ - t.log_mag);
            scale_ = t.log_mag;
        }
        acc_ += std::polar(std::exp((t.log_mag - scale_) + t.log_lo), t.phase);
    }
    void add(const LogComplex& t, double weight) {
        if (weight == 0.0) return;
        add(t * LogComplex::from_real(weight));
    }
    void add(const LogSum& other) { add(other.value()); }

    bool non_finite() const { return bad_; }
    LogComplex value() const {
        if (scale_ == -std::numeric_limits<double>::infinity()) return {};
        double m = std::abs(acc_);
        if (m == 0.0) return {};
        return {scale_ + std::log(m), std::arg(acc_)};
    }

private:
    double scale_ = -std::numeric_limits<double>::infinity();
    cplx acc_{0.0, 0.0};
    bool bad_ = false;
};

}  // namespace focklab
