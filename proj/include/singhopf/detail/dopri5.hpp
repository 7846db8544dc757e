#pragma once

// Dormand-Prince 5(4) stepper shared by the plain and variational integrators.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace singhopf::detail {

template <int N>
using VecN = Eigen::Matrix<double, N, 1>;

template <int N, class Rhs>
class DormandPrince5 {
public:
    using Vec = VecN<N>;

    DormandPrince5(Rhs rhs, double rel_tol, double abs_tol, double max_step, double direction)
        : rhs_(std::move(rhs)), rtol_(rel_tol), atol_(abs_tol), max_step_(max_step), dir_(direction < 0 ? -1.0 : 1.0)
    {
    }

    void reset(double t, const Vec& y, double h0 = 0.0)
    {
        t_ = t_prev_ = t;
        y_ = y_prev_ = y;
        f_ = f_prev_ = rhs_(t, y);
        ++evals_;
        h_ = h0 > 0.0 ? std::min(h0, max_step_) : initial_step();
    }

    /// Takes one accepted step without passing t_end. Returns false when the
    /// step size underflows.
    bool advance(double t_end)
    {
        for (;;) {
            double h = std::min(h_, max_step_);
            const double remaining = (t_end - t_) * dir_;
            bool last = false;
            if (h >= remaining) {
                h = remaining;
                last = true;
            }
            if (h <= 1e-14 * std::max(1.0, std::abs(t_)))
                return false;

            Vec err;
            Vec y_new = attempt(t_, y_, f_, h * dir_, &err, &k7_);
            double norm = 0.0;
            for (int i = 0; i < y_.size(); ++i) {
                const double sc = atol_ + rtol_ * std::max(std::abs(y_[i]), std::abs(y_new[i]));
                const double r = err[i] / sc;
                norm += r * r;
            }
            norm = std::sqrt(norm / static_cast<double>(y_.size()));
            if (!std::isfinite(norm))
                norm = 1e10;

            if (norm <= 1.0) {
                t_prev_ = t_;
                y_prev_ = y_;
                f_prev_ = f_;
                t_ = last ? t_end : t_ + h * dir_;
                y_ = y_new;
                f_ = k7_;
                ++steps_;
                const double fac = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
                if (!last || fac < 1.0)
                    h_ = h * (rejected_ ? std::min(fac, 1.0) : fac);
                rejected_ = false;
                return true;
            }
            ++rejects_;
            rejected_ = true;
            h_ = h * std::max(0.2, 0.9 * std::pow(norm, -0.2));
        }
    }

    /// Cubic Hermite interpolant on the last accepted step.
    Vec hermite(double t) const
    {
        const double h = t_ - t_prev_;
        if (h == 0.0)
            return y_;
        const double s = (t - t_prev_) / h;
        const double s2 = s * s;
        const double s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1;
        const double h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2;
        const double h11 = s3 - s2;
        return h00 * y_prev_ + h10 * h * f_prev_ + h01 * y_ + h11 * h * f_;
    }

    /// Solution at t inside the last step, from a single fifth-order step
    /// started at the step's left end. Accurate to the step tolerance.
    Vec solution_at(double t) const
    {
        if (t == t_prev_)
            return y_prev_;
        if (t == t_)
            return y_;
        return attempt(t_prev_, y_prev_, f_prev_, t - t_prev_, nullptr, nullptr);
    }

    double t() const { return t_; }
    double t_prev() const { return t_prev_; }
    const Vec& y() const { return y_; }
    const Vec& y_prev() const { return y_prev_; }
    const Vec& f() const { return f_; }
    double direction() const { return dir_; }
    std::size_t steps() const { return steps_; }
    std::size_t rejects() const { return rejects_; }

private:
    Vec attempt(double t, const Vec& y, const Vec& k1, double h, Vec* err, Vec* k7_out) const
    {
        constexpr double a21 = 1.0 / 5.0;
        constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
        constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
        constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                         a54 = -212.0 / 729.0;
        constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                         a65 = -5103.0 / 18656.0;
        constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                         b6 = 11.0 / 84.0;
        constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                         e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

        const Vec k2 = rhs_(t + h / 5.0, Vec(y + h * a21 * k1));
        const Vec k3 = rhs_(t + 3.0 * h / 10.0, Vec(y + h * (a31 * k1 + a32 * k2)));
        const Vec k4 = rhs_(t + 4.0 * h / 5.0, Vec(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
        const Vec k5 = rhs_(t + 8.0 * h / 9.0, Vec(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
        const Vec k6 = rhs_(t + h, Vec(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
        Vec y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        evals_ += 5;
        if (err) {
            const Vec k7 = rhs_(t + h, y_new);
            ++evals_;
            *err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            if (k7_out)
                *k7_out = k7;
        }
        return y_new;
    }

    double initial_step() const
    {
        // Hairer, Norsett & Wanner, starting step selection.
        double d0 = 0.0, d1 = 0.0;
        for (int i = 0; i < y_.size(); ++i) {
            const double sc = atol_ + rtol_ * std::abs(y_[i]);
            d0 += (y_[i] / sc) * (y_[i] / sc);
            d1 += (f_[i] / sc) * (f_[i] / sc);
        }
        d0 = std::sqrt(d0 / y_.size());
        d1 = std::sqrt(d1 / y_.size());
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, max_step_);
        const Vec y1 = y_ + dir_ * h0 * f_;
        const Vec f1 = rhs_(t_ + dir_ * h0, y1);
        double d2 = 0.0;
        for (int i = 0; i < y_.size(); ++i) {
            const double sc = atol_ + rtol_ * std::abs(y_[i]);
            d2 += ((f1[i] - f_[i]) / sc) * ((f1[i] - f_[i]) / sc);
        }
        d2 = std::sqrt(d2 / y_.size()) / h0;
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
        return std::min({100.0 * h0, h1, max_step_});
    }

    Rhs rhs_;
    double rtol_, atol_, max_step_, dir_;
    double t_ = 0.0, t_prev_ = 0.0, h_ = 0.0;
    Vec y_, y_prev_, f_, f_prev_, k7_;
    bool rejected_ = false;
    std::size_t steps_ = 0, rejects_ = 0;
    mutable std::size_t evals_ = 0;
};

/// Refines a sign change of g on [ta, tb] (ga*gb <= 0) by Illinois false
/// position until the bracket is below 1e-10*|t| + 1e-12.
template <class G>
double refine_root(G&& g, double ta, double ga, double tb, double gb)
{
    if (ga == 0.0)
        return ta;
    if (gb == 0.0)
        return tb;
    int side = 0;
    for (int it = 0; it < 200; ++it) {
        const double tol = 1e-10 * std::max(std::abs(ta), std::abs(tb)) + 1e-12;
        if (std::abs(tb - ta) <= tol)
            break;
        double tc = (ta * gb - tb * ga) / (gb - ga);
        if (!(tc > std::min(ta, tb) && tc < std::max(ta, tb)))
            tc = 0.5 * (ta + tb);
        const double gc = g(tc);
        if (gc == 0.0)
            return tc;
        if ((gc > 0) == (gb > 0)) {
            tb = tc;
            gb = gc;
            if (side == -1)
                ga *= 0.5;
            side = -1;
        } else {
            ta = tc;
            ga = gc;
            if (side == 1)
                gb *= 0.5;
            side = 1;
        }
    }
    return std::abs(ga) < std::abs(gb) ? ta : tb;
}

} // namespace singhopf::detail
