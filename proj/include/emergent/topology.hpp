#pragma once

#include "isr.hpp"
#include "models.hpp"
#include "nhse.hpp"
#include "numerics.hpp"
#include "parallel.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace emergent::topology {

using models::Boundary;
using models::EffectiveModel;
using models::LatticeSpec;
using models::SSHParams;

// ---------------------------------------------------------------------------
// Transition energies A(E) = E

/// E^3 + A E^2 + B E + C = 0 for the four-band model, solved by radicals.
struct CubicClosedForm {
    cplx a_coef, b_coef, c_coef;
    cplx f1, f2;
    std::vector<cplx> roots;

    std::vector<cplx> coefficients_ascending() const { return {c_coef, b_coef, a_coef, cplx(1.0, 0.0)}; }
};

inline CubicClosedForm cubic_closed_form(const models::HNParams& p) {
    const double ea = p.eps_a, eb = p.eps_b;
    const double s12 = p.t1 * p.t1 + p.t2 * p.t2;
    CubicClosedForm cf;
    cf.a_coef = -I_unit * (ea + 2.0 * eb);
    cf.b_coef = -(s12 + p.t3 * p.t3 + 2.0 * ea * eb + eb * eb);
    cf.c_coef = I_unit * (ea * p.t3 * p.t3 + eb * s12 + ea * eb * eb);
    const cplx A = cf.a_coef, B = cf.b_coef, C = cf.c_coef;

    const cplx head = -2.0 * A * A * A + 9.0 * A * B - 27.0 * C;
    const cplx root = 3.0 * std::sqrt(3.0 * (4.0 * B - A * A) * B * B + 6.0 * A * (2.0 * A * A - 9.0 * B) * C + 81.0 * C * C);
    cplx inner = head + root;
    if (std::abs(inner) < 1e-12 * std::max(1.0, std::abs(head))) inner = head - root;

    const cplx d0 = A * A - 3.0 * B;
    if (std::abs(inner) < 1e-300) {
        // Triple root.
        cf.f1 = cf.f2 = 0.0;
        cf.roots.assign(3, -A / 3.0);
        return cf;
    }
    cf.f2 = std::pow(inner, 1.0 / 3.0);
    cf.f1 = d0 / cf.f2;

    const cplx m1_13 = std::pow(cplx(-1.0, 0.0), 1.0 / 3.0);
    const cplx m1_23 = std::pow(cplx(-1.0, 0.0), 2.0 / 3.0);
    const cplx m2_13 = std::pow(cplx(-2.0, 0.0), 1.0 / 3.0);
    const cplx m2_23 = std::pow(cplx(-2.0, 0.0), 2.0 / 3.0);
    const double c2_13 = std::cbrt(2.0);

    const cplx e1 = -(A - c2_13 * cf.f1 - cf.f2 / c2_13) / 3.0;
    const cplx e2 = -(A + m2_13 * cf.f1 - 0.5 * m2_23 * cf.f2) / 3.0;
    const cplx e3 = -(A - m1_23 * c2_13 * cf.f1 + m1_13 * cf.f2 / c2_13) / 3.0;
    cf.roots = {e1, e2, e3};
    return cf;
}

struct TransitionEnergies {
    /// Companion-matrix roots (Newton polished), sorted by real then imaginary part.
    std::vector<cplx> energies;
    /// Closed-form roots, reordered to match `energies` (four-band model only).
    std::vector<cplx> closed_form;
    double method_agreement = 0.0;
    /// max |A(E_t) - E_t|.
    double max_residual = 0.0;
};

inline std::vector<cplx> match_order(const std::vector<cplx>& reference, std::vector<cplx> other, double& worst) {
    std::vector<cplx> out;
    worst = 0.0;
    for (const auto& r : reference) {
        auto it = std::min_element(other.begin(), other.end(),
                                   [&](const cplx& a, const cplx& b) { return std::abs(a - r) < std::abs(b - r); });
        worst = std::max(worst, std::abs(*it - r));
        out.push_back(*it);
        other.erase(it);
    }
    return out;
}

/// The three solutions of A(E) = E for the four-band model, by companion matrix and by radicals.
inline TransitionEnergies transition_energies(const SSHParams& p) {
    auto cf = cubic_closed_form(p.hn);
    TransitionEnergies out;
    out.energies = numerics::poly_roots(cf.coefficients_ascending());
    out.closed_form = match_order(out.energies, cf.roots, out.method_agreement);
    const auto model = models::effective_params(p);
    for (const auto& e : out.energies) {
        try {
            out.max_residual = std::max(out.max_residual, std::abs(model.a_of_e(e) - e));
        } catch (const PoleProximityError&) {
            out.max_residual = std::numeric_limits<double>::infinity();
        }
    }
    return out;
}

struct GenericTransitionEnergies {
    std::vector<cplx> energies;
    /// Roots of the cleared polynomial before pole and residual filtering.
    std::vector<cplx> polynomial_roots;
    std::size_t polynomial_degree = 0;
    /// Largest distance between the polynomial roots and eig(M_a).
    double eig_cross_check = 0.0;
    double max_residual = 0.0;
};

/// Newton steps on F(E) = A(E) - E (central-difference derivative), kept only while |F| decreases.
inline cplx refine_transition_energy(const EffectiveModel& model, cplx e, int steps = 6) {
    auto f = [&](cplx z) { return model.a_of_e(z) - z; };
    cplx fe = f(e);
    for (int i = 0; i < steps && std::abs(fe) > 0.0; ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(e));
        const cplx d = (f(e + h) - f(e - h)) / (2.0 * h);
        if (std::abs(d) == 0.0) break;
        const cplx trial = e - fe / d;
        const cplx ft = f(trial);
        if (!(std::abs(ft) < std::abs(fe))) break;
        e = trial;
        fe = ft;
    }
    return e;
}

/// A(E) = E for an SSH-kind lattice whose non-red sites are intra-cell. With
/// A(E) = R_aa(E) = H_aa - h (G' - E)^{-1} h^dagger, clearing the denominator gives
/// det(M_a - E) with M_a the cell restricted to {a} and the non-red sites. Its
/// coefficients are recovered by interpolation on a circle, then solved by
/// poly_roots; roots near the poles of the reduction or with |A(E) - E| > 1e-8 are dropped.
inline GenericTransitionEnergies transition_energies_generic(const LatticeSpec& spec, const EffectiveModel& model) {
    if (spec.red_sites.size() != 2) throw std::invalid_argument("transition_energies_generic: SSH-kind lattice required");
    std::vector<std::size_t> keep;
    const std::size_t red_b = std::max(spec.red_sites[0], spec.red_sites[1]);
    for (std::size_t i = 0; i < spec.cell_dim(); ++i)
        if (i != red_b) keep.push_back(i);
    const ComplexMatrix ma = isr::submatrix(spec.cell, keep, keep);
    const auto deg = static_cast<std::size_t>(ma.rows());

    const double radius = 1.0 + 2.0 * numerics::norm2(ma);
    const std::size_t n_pts = deg + 1;
    std::vector<cplx> samples(n_pts);
    for (std::size_t j = 0; j < n_pts; ++j) {
        const cplx z = radius * std::exp(2.0 * std::numbers::pi * I_unit * static_cast<double>(j) / static_cast<double>(n_pts));
        ComplexMatrix shifted = ma;
        shifted.diagonal().array() -= z;
        samples[j] = Eigen::PartialPivLU<ComplexMatrix>(shifted).determinant();
    }
    std::vector<cplx> coeffs(n_pts);
    for (std::size_t k = 0; k < n_pts; ++k) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < n_pts; ++j)
            acc += samples[j] *
                   std::exp(-2.0 * std::numbers::pi * I_unit * static_cast<double>(j * k) / static_cast<double>(n_pts));
        coeffs[k] = acc / static_cast<double>(n_pts) / std::pow(radius, static_cast<double>(k));
    }

    GenericTransitionEnergies out;
    out.polynomial_degree = deg;
    out.polynomial_roots = numerics::poly_roots(coeffs);
    double worst = 0.0;
    match_order(out.polynomial_roots, nhse::to_std(numerics::eigvals(ma)), worst);
    out.eig_cross_check = worst;

    for (cplx e : out.polynomial_roots) {
        if (model.pole_distance(e) <= 1e-8) continue;
        double res = 0.0;
        try {
            e = refine_transition_energy(model, e);
            res = std::abs(model.a_of_e(e) - e);
        } catch (const NumericError&) {
            continue;
        }
        if (res > 1e-8) continue;
        out.max_residual = std::max(out.max_residual, res);
        out.energies.push_back(e);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Winding numbers

struct AnalyticWinding {
    int winding = 0;
    double w_c = 0.0;
    /// a(E_t) = sqrt(v^2 - g^2), principal branch.
    cplx a;
};

inline AnalyticWinding winding_analytic(const EffectiveModel& model, double w, cplx e_t) {
    auto ev = model.evaluate(e_t);
    AnalyticWinding out;
    out.a = std::sqrt(ev.v * ev.v - ev.g * ev.g);
    out.w_c = std::sqrt(std::abs(ev.v * ev.v - ev.g * ev.g));
    if (std::abs(std::abs(w) - out.w_c) <= 1e-10) throw NumericError("winding_analytic: |w| equals the critical coupling");
    out.winding = std::abs(w) > out.w_c ? 1 : 0;
    return out;
}

inline AnalyticWinding winding_analytic(const SSHParams& p, cplx e_t) {
    return winding_analytic(models::effective_params(p), p.w, e_t);
}

inline double critical_w(const EffectiveModel& model, cplx e_t) {
    auto ev = model.evaluate(e_t);
    return std::sqrt(std::abs(ev.v * ev.v - ev.g * ev.g));
}

/// W = int dk/(4 pi i) Tr[sigma_z H^{-1} dH/dk] for H(k) = H_R(k, E_t) - E_t after the
/// imaginary-gauge transformation that makes the hoppings reciprocal: T+ and T-
/// both become a(E_t) = sqrt(T+ T-). `branch` selects the sign of a.
inline double winding_numeric(const EffectiveModel& model, double w, cplx e_t, std::size_t n_k = 1024, int branch = 1) {
    if (n_k < 64) throw std::invalid_argument("winding_numeric: n_k must be at least 64");
    auto ev = model.evaluate(e_t);
    if (std::abs(ev.a - e_t) > 1e-8)
        throw std::invalid_argument("winding_numeric: E_t does not satisfy A(E_t) = E_t");
    const cplx a = (branch >= 0 ? 1.0 : -1.0) * std::sqrt(ev.v * ev.v - ev.g * ev.g);
    const double scale = std::max({1.0, std::abs(a), std::abs(w)});

    ComplexMatrix sigma_z = ComplexMatrix::Zero(2, 2);
    sigma_z(0, 0) = 1.0;
    sigma_z(1, 1) = -1.0;
    auto integrand = [&](double k) {
        const cplx em = std::exp(-I_unit * k), ep = std::exp(I_unit * k);
        ComplexMatrix h(2, 2), dh(2, 2);
        h << 0.0, a + w * em, a + w * ep, 0.0;
        dh << 0.0, -I_unit * w * em, I_unit * w * ep, 0.0;
        if (std::abs(h(0, 1)) < 1e-12 * scale || std::abs(h(1, 0)) < 1e-12 * scale)
            throw SingularMatrixError("winding_numeric: gap closes on the k grid (at transition)");
        return (sigma_z * numerics::solve_linear(h, dh)).trace();
    };
    // (1/4 pi i) * integral = mean / (2i)
    const cplx mean = numerics::contour_integral(integrand, n_k);
    return (mean / (2.0 * I_unit)).real();
}

inline double winding_numeric(const SSHParams& p, cplx e_t, std::size_t n_k = 1024) {
    return winding_numeric(models::effective_params(p), p.w, e_t, n_k);
}

// ---------------------------------------------------------------------------
// Edge modes

struct EdgePair {
    std::size_t et_index = 0;
    cplx e_t;
    std::size_t first = 0, second = 0;
    cplx e_first, e_second;
    double splitting = 0.0;
};

struct EdgeSearch {
    std::vector<EdgePair> pairs;
    /// Per E_t, why no pair was accepted (empty string when accepted).
    std::vector<std::string> notes;
};

inline constexpr double tol_edge_default = 1e-3;

/// Accept the two eigenvalues nearest each topological E_t when both lie within
/// max(tol_edge, 10 * splitting) of E_t and every other eigenvalue is farther than
/// twice the splitting from both.
inline EdgeSearch find_edge_modes(const ComplexVector& eigenvalues, const std::vector<cplx>& e_ts,
                                  const std::vector<int>& windings, double tol_edge = tol_edge_default) {
    EdgeSearch out;
    out.notes.assign(e_ts.size(), "");
    const auto n = static_cast<std::size_t>(eigenvalues.size());
    for (std::size_t t = 0; t < e_ts.size(); ++t) {
        if (t < windings.size() && windings[t] != 1) {
            out.notes[t] = "not in topological phase at this E_t";
            continue;
        }
        if (n < 2) {
            out.notes[t] = "not in topological phase at this E_t";
            continue;
        }
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::partial_sort(idx.begin(), idx.begin() + 2, idx.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(eigenvalues(static_cast<Eigen::Index>(a)) - e_ts[t]) <
                   std::abs(eigenvalues(static_cast<Eigen::Index>(b)) - e_ts[t]);
        });
        const cplx e1 = eigenvalues(static_cast<Eigen::Index>(idx[0]));
        const cplx e2 = eigenvalues(static_cast<Eigen::Index>(idx[1]));
        const double split = std::abs(e1 - e2);
        const double tol = std::max(tol_edge, 10.0 * split);
        if (std::abs(e1 - e_ts[t]) > tol || std::abs(e2 - e_ts[t]) > tol) {
            out.notes[t] = "not in topological phase at this E_t";
            continue;
        }
        double other = std::numeric_limits<double>::infinity();
        for (std::size_t j = 2; j < n; ++j) {
            const cplx e = eigenvalues(static_cast<Eigen::Index>(idx[j]));
            other = std::min({other, std::abs(e - e1), std::abs(e - e2)});
        }
        if (!(other > 2.0 * split)) {
            out.notes[t] = "candidate pair not isolated from the rest of the spectrum";
            continue;
        }
        EdgePair pair;
        pair.et_index = t;
        pair.e_t = e_ts[t];
        pair.first = std::min(idx[0], idx[1]);
        pair.second = std::max(idx[0], idx[1]);
        pair.e_first = eigenvalues(static_cast<Eigen::Index>(pair.first));
        pair.e_second = eigenvalues(static_cast<Eigen::Index>(pair.second));
        pair.splitting = split;
        out.pairs.push_back(pair);
    }
    return out;
}

inline std::vector<int> analytic_windings(const EffectiveModel& model, double w, const std::vector<cplx>& e_ts) {
    std::vector<int> out;
    for (const auto& e : e_ts) {
        try {
            out.push_back(winding_analytic(model, w, e).winding);
        } catch (const NumericError&) {
            out.push_back(0);
        }
    }
    return out;
}

inline EdgeSearch find_edge_modes(const LatticeSpec& spec, const std::vector<cplx>& e_ts, const EffectiveModel& model,
                                  double w, double tol_edge = tol_edge_default) {
    if (spec.boundary != Boundary::OBC) throw std::invalid_argument("find_edge_modes: open boundary conditions required");
    return find_edge_modes(numerics::eigvals(models::realspace(spec)), e_ts, analytic_windings(model, w, e_ts), tol_edge);
}

// ---------------------------------------------------------------------------
// Penetration depths and envelopes

struct Depths {
    double xi_l = 0.0;
    double xi_r = 0.0;
    /// (xi_L + xi_R) / (xi_R xi_L) as printed; dimension of an inverse length.
    double xi_lr = 0.0;
};

inline Depths penetration_depths(const EffectiveModel& model, double w, cplx e) {
    auto ev = model.evaluate(e);
    const double ll = std::log(std::abs(ev.t_minus() / w));
    const double lr = std::log(std::abs(ev.t_plus() / w));
    if (std::abs(ll) < 1e-12 || std::abs(lr) < 1e-12) throw NumericError("penetration_depths: delocalized (log argument is 1)");
    Depths d;
    d.xi_l = 1.0 / ll;
    d.xi_r = 1.0 / lr;
    d.xi_lr = (d.xi_l + d.xi_r) / (d.xi_r * d.xi_l);
    return d;
}

inline Depths penetration_depths(const SSHParams& p, cplx e) { return penetration_depths(models::effective_params(p), p.w, e); }

/// q_j = sqrt|sum over the sites of cell j of conj(l) r|.
inline std::vector<double> biorthogonal_profile(const ComplexVector& left, const ComplexVector& right, std::size_t cell_dim) {
    if (left.size() != right.size()) throw std::invalid_argument("biorthogonal_profile: vector sizes differ");
    if (cell_dim == 0 || static_cast<std::size_t>(left.size()) % cell_dim != 0)
        throw std::invalid_argument("biorthogonal_profile: length is not a multiple of the cell dimension");
    const std::size_t n = static_cast<std::size_t>(left.size()) / cell_dim;
    std::vector<double> q(n);
    for (std::size_t j = 0; j < n; ++j) {
        cplx acc = 0.0;
        for (std::size_t s = 0; s < cell_dim; ++s) {
            const auto i = static_cast<Eigen::Index>(j * cell_dim + s);
            acc += std::conj(left(i)) * right(i);
        }
        q[j] = std::sqrt(std::abs(acc));
    }
    return q;
}

struct EnvelopeFit {
    /// Fitted decay rate of q_j per cell, measured from the edge the mode sits on.
    double rate = 0.0;
    bool delocalized = false;
    bool right_edge = false;
    std::size_t points = 0;
};

/// Least-squares slope of log q_j over the half of the chain nearest the edge
/// holding most of the weight (cells with q_j < 1e-13 skipped).
inline EnvelopeFit fit_envelope(std::vector<double> q) {
    if (q.empty()) throw std::invalid_argument("fit_envelope: empty profile");
    double total = 0.0, left_half = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
        total += q[j] * q[j];
        if (2 * j < q.size()) left_half += q[j] * q[j];
    }
    if (!(total > 0.0)) throw std::invalid_argument("fit_envelope: all-zero profile");
    EnvelopeFit fit;
    fit.right_edge = left_half < 0.5 * total;
    if (fit.right_edge) std::reverse(q.begin(), q.end());

    const std::size_t window = std::max<std::size_t>(2, q.size() / 2);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t j = 0; j < window && j < q.size(); ++j) {
        if (q[j] < 1e-13) continue;
        const double x = static_cast<double>(j), y = std::log(q[j]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    fit.points = m;
    if (m < 2) {
        fit.delocalized = true;
        return fit;
    }
    const double denom = static_cast<double>(m) * sxx - sx * sx;
    const double slope = (static_cast<double>(m) * sxy - sx * sy) / denom;
    fit.rate = -slope;
    fit.delocalized = std::abs(fit.rate) < 1e-6;
    return fit;
}

/// Relative deviation of the fitted decay rate of sqrt|conj(l) r| from 1/(2|xi|).
/// Returns +infinity for a delocalized (flat) profile.
inline double envelope_check(const ComplexVector& left, const ComplexVector& right, double xi, std::size_t cell_dim = 1) {
    auto fit = fit_envelope(biorthogonal_profile(left, right, cell_dim));
    if (fit.delocalized) return std::numeric_limits<double>::infinity();
    const double predicted = 1.0 / (2.0 * std::abs(xi));
    return std::abs(fit.rate - predicted) / predicted;
}

/// Splits a quasi-degenerate biorthogonal pair into a mode on the left edge and
/// one on the right edge by diagonalizing the left-half weight L^dagger W R.
inline std::pair<ComplexMatrix, ComplexMatrix> separate_edges(const ComplexMatrix& left, const ComplexMatrix& right) {
    const Eigen::Index n = right.rows();
    ComplexMatrix w_right = right;
    w_right.bottomRows(n - n / 2).setZero();
    ComplexMatrix weight = left.adjoint() * w_right;
    Eigen::ComplexEigenSolver<ComplexMatrix> es(weight);
    ComplexMatrix c = es.eigenvectors();
    ComplexMatrix r = right * c;
    ComplexMatrix l = left * c.inverse().adjoint();
    return {l, r};
}

struct EnvelopeReport {
    cplx energy;
    bool right_edge = false;
    double fitted_rate = 0.0;
    /// Predicted rate reading xi_LR as a length: 1 / (2 |xi_LR|).
    double rate_as_length = 0.0;
    /// Predicted rate reading xi_LR as an inverse length: |xi_LR| / 2.
    double rate_as_inverse = 0.0;
    double error_as_length = 0.0;
    double error_as_inverse = 0.0;
    double fit_error() const { return std::min(error_as_length, error_as_inverse); }
    std::string better() const { return error_as_inverse <= error_as_length ? "inverse_length" : "length"; }
};

/// Envelope fits for both members of an accepted edge pair.
inline std::vector<EnvelopeReport> envelope_reports(const nhse::SpectrumResult& spectrum, const EdgePair& pair,
                                                    std::size_t cell_dim, const Depths& depths) {
    const Eigen::Index n = spectrum.right_vectors.rows();
    ComplexMatrix r(n, 2), l(n, 2);
    r.col(0) = spectrum.right_vectors.col(static_cast<Eigen::Index>(pair.first));
    r.col(1) = spectrum.right_vectors.col(static_cast<Eigen::Index>(pair.second));
    l.col(0) = spectrum.left_vectors.col(static_cast<Eigen::Index>(pair.first));
    l.col(1) = spectrum.left_vectors.col(static_cast<Eigen::Index>(pair.second));
    auto [ls, rs] = separate_edges(l, r);
    std::vector<EnvelopeReport> out;
    for (Eigen::Index c = 0; c < 2; ++c) {
        EnvelopeReport rep;
        rep.energy = c == 0 ? pair.e_first : pair.e_second;
        auto fit = fit_envelope(biorthogonal_profile(ls.col(c), rs.col(c), cell_dim));
        rep.right_edge = fit.right_edge;
        rep.fitted_rate = fit.rate;
        rep.rate_as_length = 1.0 / (2.0 * std::abs(depths.xi_lr));
        rep.rate_as_inverse = std::abs(depths.xi_lr) / 2.0;
        if (fit.delocalized) {
            rep.error_as_length = rep.error_as_inverse = std::numeric_limits<double>::infinity();
        } else {
            rep.error_as_length = std::abs(fit.rate - rep.rate_as_length) / rep.rate_as_length;
            rep.error_as_inverse = std::abs(fit.rate - rep.rate_as_inverse) / rep.rate_as_inverse;
        }
        out.push_back(rep);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports and sweeps

using LatticeBuilder = std::function<LatticeSpec(double w, std::size_t n_cells, Boundary b)>;

struct TopologyReport {
    std::vector<cplx> transition_energies;
    std::vector<double> critical_w;
    std::vector<int> windings;
    std::vector<double> windings_numeric;
    std::vector<EdgePair> edge_modes;
    std::vector<Depths> depths;
    std::vector<std::vector<EnvelopeReport>> envelopes;
    std::vector<std::string> notes;
};

inline TopologyReport analyze(const LatticeBuilder& build, const EffectiveModel& model, const std::vector<cplx>& e_ts, double w,
                              std::size_t n_cells, std::size_t n_k = 1024) {
    TopologyReport rep;
    rep.transition_energies = e_ts;
    for (const auto& e : e_ts) {
        rep.critical_w.push_back(critical_w(model, e));
        double wn = std::numeric_limits<double>::quiet_NaN();
        try {
            wn = winding_numeric(model, w, e, n_k);
        } catch (const NumericError&) {
        }
        rep.windings_numeric.push_back(wn);
    }
    rep.windings = analytic_windings(model, w, e_ts);
    const LatticeSpec spec = build(w, n_cells, Boundary::OBC);
    auto spectrum = nhse::compute_spectrum(spec, nullptr);
    auto search = find_edge_modes(spectrum.eigenvalues, e_ts, rep.windings);
    rep.edge_modes = search.pairs;
    rep.notes = search.notes;
    for (const auto& pair : rep.edge_modes) {
        Depths d{};
        try {
            d = penetration_depths(model, w, pair.e_t);
        } catch (const NumericError&) {
            d.xi_l = d.xi_r = d.xi_lr = std::numeric_limits<double>::infinity();
        }
        rep.depths.push_back(d);
        rep.envelopes.push_back(envelope_reports(spectrum, pair, spec.cell_dim(), d));
    }
    return rep;
}

struct SweepRow {
    double w = 0.0;
    std::vector<cplx> obc;
    std::vector<cplx> pbc;
    std::vector<int> windings;
    std::vector<double> pbc_gap;
    std::size_t edge_pairs = 0;
    std::size_t edge_count() const { return 2 * edge_pairs; }
};

struct SweepTable {
    std::vector<cplx> transition_energies;
    std::vector<double> critical_w;
    std::vector<SweepRow> rows;
    /// Distinct edge-pair counts in order of appearance along the sweep.
    std::vector<std::size_t> phases;
    /// Per E_t: first swept w with an accepted OBC edge pair (NaN if never).
    std::vector<double> obc_onset;
    /// Per E_t: couplings at which the PBC spectrum touches E_t, |T+(E_t)| and |T-(E_t)|.
    std::vector<std::pair<double, double>> pbc_closings;
    /// Per E_t: swept w minimizing the PBC distance to E_t.
    std::vector<double> pbc_gap_min_w;
};

inline SweepTable phase_sweep(const LatticeBuilder& build, const EffectiveModel& model, const std::vector<cplx>& e_ts,
                              double w_min, double w_max, std::size_t n_w, std::size_t n_cells, std::size_t n_k_pbc = 0) {
    if (n_w < 2) throw std::invalid_argument("phase_sweep: n_w must be at least 2");
    if (n_k_pbc == 0) n_k_pbc = n_cells;
    SweepTable table;
    table.transition_energies = e_ts;
    for (const auto& e : e_ts) {
        table.critical_w.push_back(critical_w(model, e));
        auto ev = model.evaluate(e);
        table.pbc_closings.emplace_back(std::abs(ev.t_plus()), std::abs(ev.t_minus()));
    }
    table.rows.resize(n_w);
    parallel_for(n_w, [&](std::size_t i) {
        SweepRow row;
        row.w = w_min + (w_max - w_min) * static_cast<double>(i) / static_cast<double>(n_w - 1);
        const LatticeSpec obc = build(row.w, n_cells, Boundary::OBC);
        ComplexVector ev = numerics::eigvals(models::realspace(obc));
        row.obc = nhse::to_std(ev);
        for (std::size_t j = 0; j < n_k_pbc; ++j) {
            const double k = -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n_k_pbc);
            auto bk = nhse::to_std(numerics::eigvals(models::bloch(obc, k)));
            row.pbc.insert(row.pbc.end(), bk.begin(), bk.end());
        }
        row.windings = analytic_windings(model, row.w, e_ts);
        for (const auto& e : e_ts) {
            double d = std::numeric_limits<double>::infinity();
            for (const auto& z : row.pbc) d = std::min(d, std::abs(z - e));
            row.pbc_gap.push_back(d);
        }
        row.edge_pairs = find_edge_modes(ev, e_ts, row.windings).pairs.size();
        table.rows[i] = std::move(row);
    });

    table.obc_onset.assign(e_ts.size(), std::numeric_limits<double>::quiet_NaN());
    table.pbc_gap_min_w.assign(e_ts.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> best_gap(e_ts.size(), std::numeric_limits<double>::infinity());
    for (const auto& row : table.rows) {
        if (table.phases.empty() || table.phases.back() != row.edge_pairs) table.phases.push_back(row.edge_pairs);
        auto pairs = find_edge_modes(Eigen::Map<const ComplexVector>(row.obc.data(), static_cast<Eigen::Index>(row.obc.size())),
                                     e_ts, row.windings)
                         .pairs;
        for (const auto& p : pairs)
            if (std::isnan(table.obc_onset[p.et_index])) table.obc_onset[p.et_index] = row.w;
        for (std::size_t t = 0; t < e_ts.size(); ++t)
            if (row.pbc_gap[t] < best_gap[t]) {
                best_gap[t] = row.pbc_gap[t];
                table.pbc_gap_min_w[t] = row.w;
            }
    }
    return table;
}

} // namespace emergent::topology
