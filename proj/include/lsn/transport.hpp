#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "lsn/characteristics.hpp"
#include "lsn/density.hpp"
#include "lsn/detail/quadrature.hpp"
#include "lsn/errors.hpp"
#include "lsn/kinetics.hpp"

namespace lsn {

/// Frozen quadrature layout for one window: nodes for transporting the
/// window-start density and nodes for the boundary inflow, both reusable
/// across fixed-point iterations (node positions and cached density values do
/// not depend on the monomer iterate).
///
/// Initial-branch nodes are placed in the stretched coordinate y with
/// dy = dx / a(x) and carry the products f0(x) a(x), which stay bounded where
/// the density itself blows up like the inverse attachment rate near the
/// boundary; every moment then reads sum w * value * h(position).
struct WindowNodes {
    std::vector<double> x;      ///< initial-branch node sizes
    std::vector<double> weight; ///< stretched-coordinate weights
    std::vector<double> value;  ///< cached f0(x) * a(x)

    std::vector<double> s;        ///< boundary emission times, ascending
    std::vector<double> s_weight; ///< time-quadrature weights
    std::vector<double> grid;     ///< window time grid tau_0 .. tau_n
    std::size_t per_interval = 4; ///< boundary nodes per grid interval

    double f0_m0 = 0.0, f0_m1 = 0.0;

    static WindowNodes build(const KineticModel& model, const InitialDensity& f0,
                             std::vector<double> grid, int order = 8,
                             int panels_across = 24) {
        WindowNodes out;
        out.grid = std::move(grid);
        out.f0_m0 = f0.m0();
        out.f0_m1 = f0.m1();

        const auto& rule = detail::gauss_legendre(order);
        auto add_panel = [&](double y_lo, double y_hi) {
            for (int q = 0; q < order; ++q) {
                const double y =
                    0.5 * (y_lo + y_hi) + 0.5 * (y_hi - y_lo) * rule.nodes[q];
                const double xq = model.stretched_inverse(y);
                out.x.push_back(xq);
                out.weight.push_back(0.5 * (y_hi - y_lo) * rule.weights[q]);
                out.value.push_back(f0(xq) * model.a(xq));
            }
        };

        const auto panels = f0.panels();
        if (!panels.empty()) {
            const double y_total = model.stretched(f0.support_hi()) -
                                   model.stretched(f0.support_lo());
            const double h_target = y_total / panels_across;
            for (auto [p_lo, p_hi] : panels) {
                double y_lo = model.stretched(p_lo);
                const double y_hi = model.stretched(p_hi);
                if (!(y_hi > y_lo)) continue;
                // Resolve a possible integrable edge singularity of f0 * a at
                // the boundary with a geometric stack of panels.
                if (p_lo <= 0.0) {
                    double d = std::min(y_hi, y_lo + h_target);
                    std::vector<double> edges;
                    double e = d;
                    for (int k = 0; k < 10 && e > 1e-10 * d; ++k) {
                        edges.push_back(e);
                        e *= 0.125;
                    }
                    edges.push_back(0.0);
                    for (std::size_t k = edges.size(); k-- > 1;)
                        add_panel(edges[k], edges[k - 1]);
                    y_lo = d;
                    if (!(y_hi > y_lo)) continue;
                }
                const int n_sub = std::clamp(
                    static_cast<int>(std::ceil((y_hi - y_lo) / h_target)), 2, 64);
                for (int k = 0; k < n_sub; ++k)
                    add_panel(y_lo + (y_hi - y_lo) * k / n_sub,
                              y_lo + (y_hi - y_lo) * (k + 1) / n_sub);
            }
        }

        const auto& srule = detail::gauss_legendre(4);
        out.per_interval = 4;
        for (std::size_t j = 0; j + 1 < out.grid.size(); ++j) {
            const double a = out.grid[j], b = out.grid[j + 1];
            for (int q = 0; q < 4; ++q) {
                out.s.push_back(0.5 * (a + b) + 0.5 * (b - a) * srule.nodes[q]);
                out.s_weight.push_back(0.5 * (b - a) * srule.weights[q]);
            }
        }
        return out;
    }
};

/// Transported node positions over one window under a given monomer iterate:
/// every initial-branch node and every boundary emission node is carried to
/// all later grid times in a single adaptive solve per node, after which any
/// moment at any grid time is a weighted sum.
///
/// Number and mass are anchored at the exact window-start moments: the node
/// quadrature only supplies the transport increment, so a static quadrature
/// bias cannot leak into the balance between windows.
class WindowPushforward {
public:
    WindowPushforward(const CharacteristicSolution& cs, const WindowNodes& nodes)
        : nodes_(&nodes) {
        const auto& grid = nodes.grid;
        const std::size_t n = grid.size();
        const double t1 = grid.back();

        positions_.assign(nodes.x.size(), {});
        for (std::size_t k = 0; k < nodes.x.size(); ++k) {
            auto& row = positions_[k];
            row.assign(n, 0.0);
            row[0] = nodes.x[k];
            if (n > 1) {
                std::vector<double> times(grid.begin() + 1, grid.end());
                cs.trace_samples(grid[0], nodes.x[k], t1, times,
                                 [&](std::size_t i, double, double xv, double) {
                                     row[i + 1] = xv;
                                 });
            }
        }

        boundary_positions_.assign(nodes.s.size(), {});
        nucleation_.assign(nodes.s.size(), 0.0);
        const auto& nu = cs.model().nucleation;
        for (std::size_t q = 0; q < nodes.s.size(); ++q) {
            nucleation_[q] = nu(cs.path()(nodes.s[q]));
            auto& row = boundary_positions_[q];
            row.assign(n, 0.0);
            const std::size_t j = q / nodes.per_interval; // emission interval
            std::vector<double> times(grid.begin() + j + 1, grid.end());
            if (!times.empty())
                cs.trace_boundary_samples(nodes.s[q], t1, times,
                                          [&](std::size_t i, double, double xv,
                                              double) { row[j + 1 + i] = xv; });
        }
    }

    const std::vector<double>& grid() const { return nodes_->grid; }

    /// Number density integral at grid time i: the initial count plus the
    /// accumulated inflow.
    double count(std::size_t i) const {
        double c = nodes_->f0_m0;
        for (std::size_t q = 0; q < boundary_count(i); ++q)
            c += nodes_->s_weight[q] * nucleation_[q];
        return c;
    }

    /// Mass integral at grid time i, anchored at the exact start mass.
    double mass(std::size_t i) const {
        double m = nodes_->f0_m1;
        for (std::size_t k = 0; k < nodes_->x.size(); ++k)
            m += nodes_->weight[k] * nodes_->value[k] *
                 (positions_[k][i] - nodes_->x[k]);
        for (std::size_t q = 0; q < boundary_count(i); ++q)
            m += nodes_->s_weight[q] * nucleation_[q] * boundary_positions_[q][i];
        return m;
    }

    /// Generic moment of h at grid time i by plain node summation.
    double moment(const std::function<double(double)>& h, std::size_t i) const {
        double m = 0.0;
        for (std::size_t k = 0; k < nodes_->x.size(); ++k)
            m += nodes_->weight[k] * nodes_->value[k] * h(positions_[k][i]);
        for (std::size_t q = 0; q < boundary_count(i); ++q)
            m += nodes_->s_weight[q] * nucleation_[q] * h(boundary_positions_[q][i]);
        return m;
    }

private:
    std::size_t boundary_count(std::size_t i) const {
        // Grid time i is preceded by exactly i complete emission intervals.
        return std::min(i * nodes_->per_interval, nodes_->s.size());
    }

    const WindowNodes* nodes_;
    std::vector<std::vector<double>> positions_;
    std::vector<std::vector<double>> boundary_positions_;
    std::vector<double> nucleation_;
};

/// The size distribution at one time inside a window, represented through the
/// characteristic flow: sizes above the separating size carry transported
/// window-start data, sizes below carry nucleation inflow scaled by the
/// hitting-time derivative. Evaluation is pointwise exact up to integrator
/// tolerance; nothing is gridded.
class DensitySnapshot {
public:
    DensitySnapshot(std::shared_ptr<const CharacteristicSolution> cs,
                    std::shared_ptr<const InitialDensity> f0, double t)
        : cs_(std::move(cs)), f0_(std::move(f0)), t_(t) {
        separating_ = cs_->separating_size(t_);
        if (f0_->support_hi() > f0_->support_lo()) {
            upper_ = cs_->trace(cs_->window_begin(), f0_->support_hi(), t_).position;
            lower_ = cs_->trace(cs_->window_begin(), f0_->support_lo(), t_).position;
        } else {
            upper_ = separating_;
            lower_ = separating_;
        }
    }

    double time() const { return t_; }
    double separating_size() const { return separating_; }
    const CharacteristicSolution& flow() const { return *cs_; }
    const InitialDensity& start_density() const { return *f0_; }

    /// Upper edge of the support (the transported window-start upper edge).
    double support_hi() const { return std::max(upper_, separating_); }

    double operator()(double x) const {
        if (x <= 0.0) return 0.0;
        if (x > support_hi() * (1.0 + 1e-12)) return 0.0;
        auto r = cs_->trace(t_, x, cs_->window_begin());
        if (r.hit_boundary) {
            const double nu = cs_->model().nucleation(cs_->path()(r.hit_time));
            return nu * cs_->boundary_density_factor(r, x);
        }
        return (*f0_)(r.position) * cs_->jacobian(r, x);
    }

    /// Sizes where the profile is non-smooth at this time: the separating
    /// size plus the transported window-start breakpoints.
    std::vector<double> split_points() const {
        std::vector<double> pts{separating_};
        const double t0 = cs_->window_begin();
        for (double b : f0_->breakpoints())
            pts.push_back(cs_->trace(t0, b, t_).position);
        std::sort(pts.begin(), pts.end());
        return pts;
    }

    /// Transported jump locations (window-start jumps plus the separating
    /// size, where the two branches generally disagree).
    std::vector<double> jump_points() const {
        std::vector<double> pts{separating_};
        const double t0 = cs_->window_begin();
        for (double b : f0_->jumps())
            pts.push_back(cs_->trace(t0, b, t_).position);
        std::sort(pts.begin(), pts.end());
        return pts;
    }

    /// Moment of h by pushing the window-start density and the boundary
    /// inflow forward to this time (no density evaluations involved).
    double moment(const std::function<double(double)>& h) const {
        ensure_nodes();
        double m = 0.0;
        for (std::size_t k = 0; k < nodes_.x.size(); ++k)
            m += nodes_.weight[k] * nodes_.value[k] * h(node_pos_[k]);
        for (std::size_t q = 0; q < nodes_.s.size(); ++q)
            m += nodes_.s_weight[q] * node_nu_[q] * h(boundary_pos_[q]);
        return m;
    }

    double count() const {
        ensure_nodes();
        double c = nodes_.f0_m0;
        for (std::size_t q = 0; q < nodes_.s.size(); ++q)
            c += nodes_.s_weight[q] * node_nu_[q];
        return c;
    }

    double mass() const {
        ensure_nodes();
        double m = nodes_.f0_m1;
        for (std::size_t k = 0; k < nodes_.x.size(); ++k)
            m += nodes_.weight[k] * nodes_.value[k] * (node_pos_[k] - nodes_.x[k]);
        for (std::size_t q = 0; q < nodes_.s.size(); ++q)
            m += nodes_.s_weight[q] * node_nu_[q] * boundary_pos_[q];
        return m;
    }

    /// Moment of h by direct quadrature of pointwise density values: the
    /// boundary-fed part in the stretched coordinate (where density times
    /// attachment rate is bounded), the transported part split at the
    /// transported breakpoints. Independent of the pushforward route, hence a
    /// genuine cross-check of the representation.
    double moment_direct(const std::function<double(double)>& h) const {
        const auto& model = cs_->model();
        const auto& rule = detail::gauss_legendre(8);
        double total = 0.0;
        auto add_stretched_panel = [&](double y_lo, double y_hi) {
            for (int q = 0; q < 8; ++q) {
                const double y =
                    0.5 * (y_lo + y_hi) + 0.5 * (y_hi - y_lo) * rule.nodes[q];
                const double x = model.stretched_inverse(y);
                total += 0.5 * (y_hi - y_lo) * rule.weights[q] * h(x) *
                         (*this)(x)*model.a(x);
            }
        };
        const double y_c = model.stretched(separating_);
        const int below = 12;
        for (int k = 0; k < below; ++k)
            add_stretched_panel(y_c * k / below, y_c * (k + 1) / below);
        // Transported part, also in the stretched coordinate, split at the
        // transported breakpoints. Near a dissolution stop the older
        // nucleation-fed profile steepens like an inverse power of the size,
        // so a geometric ladder of extra edges keeps panel widths
        // proportional to the distance from the boundary.
        const double y_top = model.stretched(support_hi());
        if (y_top > y_c) {
            std::vector<double> yedges{y_c, y_top};
            for (double p : split_points())
                if (p > separating_ && p < support_hi())
                    yedges.push_back(model.stretched(p));
            if (y_c > 0.0)
                for (double e = 0.25 * y_top;
                     e > std::max(2.0 * y_c, 1e-13 * y_top); e *= 0.25)
                    yedges.push_back(e);
            std::sort(yedges.begin(), yedges.end());
            for (std::size_t i = 0; i + 1 < yedges.size(); ++i) {
                const double mid = 0.5 * (yedges[i] + yedges[i + 1]);
                if (mid > yedges[i]) {
                    add_stretched_panel(yedges[i], mid);
                    add_stretched_panel(mid, yedges[i + 1]);
                }
            }
        }
        return total;
    }

    /// Limit of the advective flux (a u - b) f at the boundary, from a
    /// geometric size sequence accelerated by iterated Aitken extrapolation.
    /// For an inflow solution this recovers the nucleation rate at this time.
    double boundary_flux_limit() const {
        const auto& model = cs_->model();
        const double u_now = cs_->path()(t_);
        double y_base = 0.5 * model.stretched(std::max(
                                  std::min(separating_, cs_->switch_size()), 0.0));
        if (!(y_base > 0.0))
            y_base = 0.5 * model.stretched(cs_->switch_size());
        std::vector<double> seq;
        for (int k = 0; k < 18; ++k) {
            const double x = model.stretched_inverse(y_base * std::pow(0.5, k));
            const double flux =
                (model.a(x) * u_now - model.b(x)) * (*this)(x);
            seq.push_back(flux);
        }
        for (int round = 0; round < 2; ++round) {
            if (seq.size() < 3) break;
            std::vector<double> acc;
            for (std::size_t k = 0; k + 2 < seq.size(); ++k) {
                const double d2 = seq[k + 2] - 2.0 * seq[k + 1] + seq[k];
                if (std::abs(d2) < 1e-300)
                    acc.push_back(seq[k + 2]);
                else
                    acc.push_back(seq[k + 2] -
                                  (seq[k + 2] - seq[k + 1]) * (seq[k + 2] - seq[k + 1]) / d2);
            }
            seq = std::move(acc);
        }
        return seq.back();
    }

private:
    void ensure_nodes() const {
        if (nodes_ready_) return;
        const double t0 = cs_->window_begin();
        // Private pushforward layout for this single time: the window grid is
        // just a partition of [t0, t] for the boundary-time quadrature.
        const int nt = 48;
        std::vector<double> grid(nt + 1);
        for (int i = 0; i <= nt; ++i) grid[i] = t0 + (t_ - t0) * i / nt;
        nodes_ = WindowNodes::build(cs_->model(), *f0_, std::move(grid));
        node_pos_.assign(nodes_.x.size(), 0.0);
        for (std::size_t k = 0; k < nodes_.x.size(); ++k)
            node_pos_[k] = cs_->trace(t0, nodes_.x[k], t_).position;
        boundary_pos_.assign(nodes_.s.size(), 0.0);
        node_nu_.assign(nodes_.s.size(), 0.0);
        const auto& nu = cs_->model().nucleation;
        for (std::size_t q = 0; q < nodes_.s.size(); ++q) {
            boundary_pos_[q] = cs_->trace_from_boundary(nodes_.s[q], t_).position;
            node_nu_[q] = nu(cs_->path()(nodes_.s[q]));
        }
        nodes_ready_ = true;
    }

    std::shared_ptr<const CharacteristicSolution> cs_;
    std::shared_ptr<const InitialDensity> f0_;
    double t_;
    double separating_ = 0.0;
    double upper_ = 0.0;
    double lower_ = 0.0;

    mutable bool nodes_ready_ = false;
    mutable WindowNodes nodes_;
    mutable std::vector<double> node_pos_;
    mutable std::vector<double> boundary_pos_;
    mutable std::vector<double> node_nu_;
};

} // namespace lsn
