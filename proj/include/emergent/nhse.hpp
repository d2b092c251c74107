#pragma once

#include "models.hpp"
#include "numerics.hpp"
#include "parallel.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace emergent::nhse {

using models::Boundary;
using models::EffectiveModel;
using models::HNParams;
using models::LatticeSpec;

enum class Label { LeftLocalized, RightLocalized, Bulk, Edge };

inline std::string to_string(Label l) {
    switch (l) {
    case Label::LeftLocalized: return "left";
    case Label::RightLocalized: return "right";
    case Label::Edge: return "edge";
    default: return "bulk";
    }
}

inline constexpr double kappa_min = 1e-3;
inline constexpr double localization_threshold = 0.5;
inline constexpr double contour_guard = 0.05;

/// kappa(E) = log sqrt|T-(E) / T+(E)|; negative means left-localized skin modes.
inline double kappa(const EffectiveModel& model, cplx e) {
    auto ev = model.evaluate(e);
    const double tp = std::abs(ev.t_plus()), tm = std::abs(ev.t_minus());
    if (tp <= models::closed_form_guard) throw PoleProximityError("kappa: T+(E) vanishes");
    if (tm <= models::closed_form_guard) throw PoleProximityError("kappa: T-(E) vanishes");
    return 0.5 * std::log(tm / tp);
}

/// kappa, or NaN where it is undefined.
inline double kappa_or_nan(const EffectiveModel& model, cplx e) {
    try {
        return kappa(model, e);
    } catch (const NumericError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

inline bool nhse_present(const HNParams& p) {
    constexpr double z = 1e-12;
    return std::abs(p.t1) > z && std::abs(p.t2) > z && std::abs(p.eps_b) > z;
}

/// Numerator of the no-skin-effect constraint v_R g_R + v_I g_I = 0, i.e.
/// Re(v conj g) multiplied by |(eps_b + iE)^2 + t3^2|^2. A polynomial in (Re E, Im E).
inline double nhse_constraint_numerator(const HNParams& p, cplx e) {
    const double er = e.real(), ei = e.imag();
    const double t1 = p.t1, t2 = p.t2, t3 = p.t3, eb = p.eps_b;
    return 2.0 * t1 * t2 * (eb - ei) *
           (t2 * (er * er + (eb - ei) * (eb - ei)) + t3 * (t1 * t1 - t2 * t2 + t2 * t3));
}

inline double localization_measure(const ComplexVector& psi) {
    const auto n = psi.size();
    double total = 0.0, moment = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double w = std::norm(psi(j));
        total += w;
        moment += static_cast<double>(j) * w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("localization_measure: zero vector");
    if (n == 1) return 0.0;
    return 2.0 * (moment / total) / static_cast<double>(n - 1) - 1.0;
}

/// Restriction of a chain vector to the given site indices.
inline ComplexVector restrict_to(const ComplexVector& psi, const std::vector<std::size_t>& sites) {
    ComplexVector out(static_cast<Eigen::Index>(sites.size()));
    for (std::size_t i = 0; i < sites.size(); ++i) out(static_cast<Eigen::Index>(i)) = psi(static_cast<Eigen::Index>(sites[i]));
    return out;
}

/// Multiset invariance under E -> -conj(E), by greedy nearest pairing.
inline bool check_phs_dagger(const std::vector<cplx>& spectrum, double tol) {
    std::vector<bool> used(spectrum.size(), false);
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        if (used[i]) continue;
        const cplx target = -std::conj(spectrum[i]);
        double best = std::numeric_limits<double>::infinity();
        std::size_t pick = i;
        for (std::size_t j = 0; j < spectrum.size(); ++j) {
            if (used[j]) continue;
            const double d = std::abs(spectrum[j] - target);
            if (d < best) {
                best = d;
                pick = j;
            }
        }
        if (best > tol) return false;
        used[i] = used[pick] = true;
    }
    return true;
}

inline std::vector<cplx> to_std(const ComplexVector& v) { return {v.data(), v.data() + v.size()}; }

/// Largest PHS-dagger mismatch: max over E of the distance from -conj(E) to the nearest spectral point.
inline double phs_dagger_defect(const std::vector<cplx>& spectrum) {
    double worst = 0.0;
    for (const auto& e : spectrum) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& f : spectrum) best = std::min(best, std::abs(f + std::conj(e)));
        worst = std::max(worst, best);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// kappa = 0 contours

struct Curve {
    std::string branch;
    std::vector<cplx> points;
};

/// Analytic kappa = 0 contours: the line Im E = eps_b and the branches
/// Im E = eps_b +- sqrt(-t2 [Re(E)^2 t2 + t3 (t1^2 - t2^2 + t2 t3)]) / t2
/// wherever the radicand is non-negative. Points within 1e-6 of a pole are skipped.
inline std::vector<Curve> kappa_zero_contours(const HNParams& p, double er_min, double er_max, std::size_t n_samples) {
    if (std::abs(p.t2) < 1e-12) throw std::invalid_argument("kappa_zero_contours: t2 must be non-zero");
    if (n_samples < 2) throw std::invalid_argument("kappa_zero_contours: need at least two samples");
    if (!(er_max > er_min)) throw std::invalid_argument("kappa_zero_contours: empty Re(E) range");
    const auto poles = models::hn_poles(p);
    auto near_pole = [&](cplx e) {
        for (const auto& q : poles)
            if (std::abs(e - q) < 1e-6) return true;
        return false;
    };
    Curve line{"line", {}}, plus{"plus", {}}, minus{"minus", {}};
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double er = er_min + (er_max - er_min) * static_cast<double>(i) / static_cast<double>(n_samples - 1);
        const cplx on_line(er, p.eps_b);
        if (!near_pole(on_line)) line.points.push_back(on_line);
        const double rad = -p.t2 * (er * er * p.t2 + p.t3 * (p.t1 * p.t1 - p.t2 * p.t2 + p.t2 * p.t3));
        if (rad < 0.0) continue;
        const double shift = std::sqrt(rad) / p.t2;
        const cplx up(er, p.eps_b + shift), down(er, p.eps_b - shift);
        if (!near_pole(up)) plus.points.push_back(up);
        if (!near_pole(down)) minus.points.push_back(down);
    }
    std::vector<Curve> out;
    for (auto* c : {&line, &plus, &minus})
        if (!c->points.empty()) out.push_back(std::move(*c));
    return out;
}

inline double distance_to_curves(cplx e, const std::vector<Curve>& curves) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : curves)
        for (const auto& q : c.points) best = std::min(best, std::abs(e - q));
    return best;
}

// ---------------------------------------------------------------------------
// Spectra

/// Union of the Bloch spectra on a uniform k grid of n_k points.
inline std::vector<cplx> pbc_curve(const LatticeSpec& spec, std::size_t n_k = 512) {
    std::vector<std::vector<cplx>> per_k(n_k);
    parallel_for(n_k, [&](std::size_t j) {
        const double k = -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n_k);
        per_k[j] = to_std(numerics::eigvals(models::bloch(spec, k)));
    });
    std::vector<cplx> out;
    for (auto& v : per_k) out.insert(out.end(), v.begin(), v.end());
    return out;
}

/// Directed Hausdorff distance: max over points of `from` of the distance to `to`.
inline double hausdorff_directed(const std::vector<cplx>& from, const std::vector<cplx>& to) {
    double worst = 0.0;
    for (const auto& a : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& b : to) best = std::min(best, std::abs(a - b));
        worst = std::max(worst, best);
    }
    return worst;
}

struct SpectrumResult {
    ComplexVector eigenvalues;
    ComplexMatrix right_vectors;
    ComplexMatrix left_vectors;
    std::vector<Label> labels;
    std::vector<double> kappa;
    /// localization_measure of the red-site restriction of each right vector.
    std::vector<double> measure;
    std::vector<bool> near_defective;
    Boundary boundary = Boundary::OBC;

    std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
    std::size_t count(Label l) const { return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l)); }
};

struct SpectrumOptions {
    /// Eigenvalue indices (after sorting) to label Edge, e.g. from topology::find_edge_modes.
    std::vector<std::size_t> edge_indices;
    double kappa_min = nhse::kappa_min;
    double threshold = localization_threshold;
};

/// Eigendecomposition of the chain with per-state labels. For OBC with a model:
/// Edge when listed in options.edge_indices; otherwise left/right by the sign of
/// kappa when |kappa| > kappa_min and the red-site localization measure agrees in
/// sign; a state with |kappa| <= kappa_min but |measure| > threshold (a boundary
/// state that is not a skin mode) is labelled by its measure; everything else Bulk.
inline SpectrumResult compute_spectrum(const LatticeSpec& spec, const EffectiveModel* model,
                                       const SpectrumOptions& options = {}) {
    auto sys = numerics::eig(models::realspace(spec));
    SpectrumResult out;
    out.boundary = spec.boundary;
    out.eigenvalues = sys.eigenvalues;
    out.right_vectors = std::move(sys.right_vectors);
    out.left_vectors = std::move(sys.left_vectors);
    out.near_defective = std::move(sys.near_defective);
    const auto n = out.size();
    out.labels.assign(n, Label::Bulk);
    out.kappa.assign(n, std::numeric_limits<double>::quiet_NaN());
    out.measure.assign(n, 0.0);

    const auto reds = models::red_indices(spec);
    std::vector<bool> edge(n, false);
    for (auto i : options.edge_indices)
        if (i < n) edge[i] = true;

    for (std::size_t i = 0; i < n; ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        ComplexVector red = restrict_to(out.right_vectors.col(col), reds);
        out.measure[i] = red.squaredNorm() > 0.0 ? localization_measure(red) : 0.0;
        if (model) out.kappa[i] = kappa_or_nan(*model, out.eigenvalues(col));
        if (spec.boundary != Boundary::OBC) continue;
        if (edge[i]) {
            out.labels[i] = Label::Edge;
            continue;
        }
        const double k = out.kappa[i];
        const double m = out.measure[i];
        if (std::isfinite(k) && std::abs(k) > options.kappa_min) {
            if (k < 0.0 && m < 0.0) out.labels[i] = Label::LeftLocalized;
            else if (k > 0.0 && m > 0.0) out.labels[i] = Label::RightLocalized;
        } else if (std::abs(m) > options.threshold) {
            out.labels[i] = m < 0.0 ? Label::LeftLocalized : Label::RightLocalized;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// kappa maps

struct Grid {
    double re_min = -1.0, re_max = 1.0;
    double im_min = -1.0, im_max = 1.0;
    std::size_t n_re = 400, n_im = 400;

    cplx point(std::size_t ir, std::size_t ii) const {
        auto lerp = [](double a, double b, std::size_t i, std::size_t n) {
            return n <= 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
        };
        return {lerp(re_min, re_max, ir, n_re), lerp(im_min, im_max, ii, n_im)};
    }
};

/// Bounding box of the points padded by 20% of its extent on every side.
inline Grid padded_grid(const std::vector<cplx>& points, std::size_t n_re = 400, std::size_t n_im = 400) {
    Grid g;
    g.n_re = n_re;
    g.n_im = n_im;
    if (points.empty()) return g;
    g.re_min = g.re_max = points.front().real();
    g.im_min = g.im_max = points.front().imag();
    for (const auto& p : points) {
        g.re_min = std::min(g.re_min, p.real());
        g.re_max = std::max(g.re_max, p.real());
        g.im_min = std::min(g.im_min, p.imag());
        g.im_max = std::max(g.im_max, p.imag());
    }
    const double pr = std::max(0.2 * (g.re_max - g.re_min), 0.1);
    const double pi = std::max(0.2 * (g.im_max - g.im_min), 0.1);
    g.re_min -= pr;
    g.re_max += pr;
    g.im_min -= pi;
    g.im_max += pi;
    return g;
}

struct KappaMap {
    Grid grid;
    /// values[ii * n_re + ir]; NaN where kappa is undefined.
    std::vector<double> values;
    std::vector<Curve> zero_contours;

    double at(std::size_t ir, std::size_t ii) const { return values[ii * grid.n_re + ir]; }
};

inline KappaMap compute_kappa_map(const EffectiveModel& model, const Grid& grid) {
    KappaMap map;
    map.grid = grid;
    map.values.assign(grid.n_re * grid.n_im, 0.0);
    parallel_for(grid.n_im, [&](std::size_t ii) {
        for (std::size_t ir = 0; ir < grid.n_re; ++ir) map.values[ii * grid.n_re + ir] = kappa_or_nan(model, grid.point(ir, ii));
    });
    return map;
}

} // namespace emergent::nhse
