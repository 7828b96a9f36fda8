#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "lsn/errors.hpp"

namespace lsn::detail {

/// Locates the interval index i with xs[i] <= x < xs[i+1], clamped to the ends.
inline std::size_t interval_index(const std::vector<double>& xs, double x) {
    if (x <= xs.front()) return 0;
    if (x >= xs[xs.size() - 2]) return xs.size() - 2;
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    return static_cast<std::size_t>(it - xs.begin()) - 1;
}

/// Piecewise-linear interpolant on strictly increasing abscissas.
/// Outside the table the end segments are extended with their own slopes
/// (constant-slope extrapolation).
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;

    PiecewiseLinear(std::vector<double> xs, std::vector<double> ys)
        : xs_(std::move(xs)), ys_(std::move(ys)) {
        if (xs_.size() < 2 || xs_.size() != ys_.size())
            throw error("piecewise-linear table needs at least two (x, y) pairs");
        for (std::size_t i = 1; i < xs_.size(); ++i)
            if (!(xs_[i] > xs_[i - 1]))
                throw error("piecewise-linear abscissas must be strictly increasing");
    }

    double operator()(double x) const {
        const std::size_t i = interval_index(xs_, x);
        const double t = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
        return ys_[i] + t * (ys_[i + 1] - ys_[i]);
    }

    /// Slope of the segment containing x (end slopes outside the table).
    double slope(double x) const {
        const std::size_t i = interval_index(xs_, x);
        return (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]);
    }

    const std::vector<double>& abscissas() const { return xs_; }
    const std::vector<double>& ordinates() const { return ys_; }

private:
    std::vector<double> xs_, ys_;
};

/// Monotone cubic Hermite interpolant (Fritsch-Carlson limiter). Preserves
/// monotonicity of the data, which keeps tabulated coordinate maps invertible.
class MonotoneCubic {
public:
    MonotoneCubic() = default;

    MonotoneCubic(std::vector<double> xs, std::vector<double> ys)
        : xs_(std::move(xs)), ys_(std::move(ys)) {
        const std::size_t n = xs_.size();
        if (n < 2 || n != ys_.size())
            throw error("monotone cubic table needs at least two (x, y) pairs");
        for (std::size_t i = 1; i < n; ++i)
            if (!(xs_[i] > xs_[i - 1]))
                throw error("monotone cubic abscissas must be strictly increasing");

        std::vector<double> d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i)
            d[i] = (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]);

        m_.assign(n, 0.0);
        m_[0] = d[0];
        m_[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (d[i - 1] * d[i] <= 0.0) {
                m_[i] = 0.0;
            } else {
                // Harmonic-mean slope keeps the interpolant monotone.
                const double w1 = 2.0 * (xs_[i + 1] - xs_[i]) + (xs_[i] - xs_[i - 1]);
                const double w2 = (xs_[i + 1] - xs_[i]) + 2.0 * (xs_[i] - xs_[i - 1]);
                m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
        }
        // Fritsch-Carlson clamp on the end slopes.
        for (std::size_t i : {std::size_t{0}, n - 1}) {
            const double dd = (i == 0) ? d[0] : d[n - 2];
            if (dd == 0.0)
                m_[i] = 0.0;
            else if (m_[i] / dd > 3.0)
                m_[i] = 3.0 * dd;
            else if (m_[i] / dd < 0.0)
                m_[i] = 0.0;
        }
    }

    /// Hermite interpolant with caller-supplied node slopes. Slopes are still
    /// limited to three times the secant so monotone data stays monotone; with
    /// exact derivatives of a smooth function this recovers fourth order.
    MonotoneCubic(std::vector<double> xs, std::vector<double> ys,
                  std::vector<double> slopes)
        : xs_(std::move(xs)), ys_(std::move(ys)), m_(std::move(slopes)) {
        const std::size_t n = xs_.size();
        if (n < 2 || n != ys_.size() || n != m_.size())
            throw error("monotone cubic table needs matching (x, y, slope) triples");
        for (std::size_t i = 1; i < n; ++i)
            if (!(xs_[i] > xs_[i - 1]))
                throw error("monotone cubic abscissas must be strictly increasing");
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double d = (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]);
            for (std::size_t j : {i, i + 1}) {
                if (d == 0.0)
                    m_[j] = 0.0;
                else if (m_[j] / d < 0.0)
                    m_[j] = 0.0;
                else if (m_[j] / d > 3.0)
                    m_[j] = 3.0 * d;
            }
        }
    }

    double operator()(double x) const {
        const std::size_t i = interval_index(xs_, x);
        const double h = xs_[i + 1] - xs_[i];
        const double t = (x - xs_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1;
        const double h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2;
        const double h11 = t3 - t2;
        return h00 * ys_[i] + h10 * h * m_[i] + h01 * ys_[i + 1] + h11 * h * m_[i + 1];
    }

    const std::vector<double>& abscissas() const { return xs_; }
    const std::vector<double>& ordinates() const { return ys_; }

private:
    std::vector<double> xs_, ys_, m_;
};

} // namespace lsn::detail
