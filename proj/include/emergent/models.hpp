#pragma once

#include "isr.hpp"
#include "numerics.hpp"

#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace emergent::models {

enum class Boundary { OBC, PBC };
enum class ModelKind { HN, SSH };

inline std::string to_string(Boundary b) { return b == Boundary::OBC ? "obc" : "pbc"; }
inline std::string to_string(ModelKind k) { return k == ModelKind::HN ? "hn" : "ssh"; }

struct HNParams {
    double eps_a = 0.0;
    double eps_b = 0.0;
    double t1 = 0.0;
    double t2 = 0.0;
    double t3 = 0.0;
};

struct SSHParams {
    HNParams hn;
    double w = 0.0;
};

/// Translation-invariant chain. Block [n, n+1] of the real-space matrix is
/// `forward`, block [n+1, n] is `backward` (defaults to forward^dagger), so the
/// Bloch matrix is cell + forward e^{ik} + backward e^{-ik}.
struct LatticeSpec {
    ComplexMatrix cell;
    ComplexMatrix forward;
    std::optional<ComplexMatrix> backward;
    std::size_t n_cells = 2;
    Boundary boundary = Boundary::OBC;
    /// Positions of the sites kept by the reduction, within one cell.
    std::vector<std::size_t> red_sites{0};

    std::size_t cell_dim() const { return static_cast<std::size_t>(cell.rows()); }
    ComplexMatrix backward_block() const { return backward ? *backward : ComplexMatrix(forward.adjoint()); }

    void validate() const {
        if (cell.rows() != cell.cols() || cell.rows() < 1) throw std::invalid_argument("LatticeSpec: cell must be square");
        if (forward.rows() != cell.rows() || forward.cols() != cell.cols())
            throw std::invalid_argument("LatticeSpec: inter-cell block must match the cell dimension");
        if (backward && (backward->rows() != cell.rows() || backward->cols() != cell.cols()))
            throw std::invalid_argument("LatticeSpec: backward block must match the cell dimension");
        if (n_cells < 2) throw std::invalid_argument("LatticeSpec: n_cells must be at least 2");
        for (auto r : red_sites)
            if (r >= cell_dim()) throw std::invalid_argument("LatticeSpec: red site outside the cell");
    }

    LatticeSpec with(std::size_t n, Boundary b) const {
        LatticeSpec out = *this;
        out.n_cells = n;
        out.boundary = b;
        return out;
    }
};

inline ComplexMatrix realspace(const LatticeSpec& spec) {
    spec.validate();
    const auto d = static_cast<Eigen::Index>(spec.cell_dim());
    const auto n = static_cast<Eigen::Index>(spec.n_cells);
    const ComplexMatrix back = spec.backward_block();
    ComplexMatrix h = ComplexMatrix::Zero(n * d, n * d);
    for (Eigen::Index c = 0; c < n; ++c) {
        h.block(c * d, c * d, d, d) = spec.cell;
        if (c + 1 < n) {
            h.block(c * d, (c + 1) * d, d, d) += spec.forward;
            h.block((c + 1) * d, c * d, d, d) += back;
        }
    }
    if (spec.boundary == Boundary::PBC) {
        h.block((n - 1) * d, 0, d, d) += spec.forward;
        h.block(0, (n - 1) * d, d, d) += back;
    }
    return h;
}

inline ComplexMatrix bloch(const LatticeSpec& spec, double k) {
    return spec.cell + spec.forward * std::exp(I_unit * k) + spec.backward_block() * std::exp(-I_unit * k);
}

/// Global indices of the red sites of a chain built from `spec`.
inline std::vector<std::size_t> red_indices(const LatticeSpec& spec) {
    std::vector<std::size_t> out;
    auto reds = spec.red_sites;
    std::sort(reds.begin(), reds.end());
    for (std::size_t c = 0; c < spec.n_cells; ++c)
        for (auto r : reds) out.push_back(c * spec.cell_dim() + r);
    return out;
}

// ---------------------------------------------------------------------------
// Named models

/// Three sites u, v, c: u-v coupled by 1, c carries i*alpha and couples to u via e^{i phi}, to v via 1.
inline ComplexMatrix build_three_site(double phi, double alpha) {
    ComplexMatrix h(3, 3);
    const cplx e = std::exp(I_unit * phi);
    h << 0.0, 1.0, e,
         1.0, 0.0, 1.0,
         std::conj(e), 1.0, I_unit * alpha;
    return h;
}

/// Bloch matrix of the three-band lattice, order (a, u, v). The u-v coupling is
/// -i t3 / +i t3, the sign for which the reduction reproduces the closed-form v, g.
inline ComplexMatrix bloch_hn(const HNParams& p, double k) {
    const cplx ek = std::exp(I_unit * k);
    const cplx emk = std::exp(-I_unit * k);
    ComplexMatrix h(3, 3);
    h << I_unit * p.eps_a - 2.0 * p.t2 * std::sin(k), p.t1 + p.t2 * emk, p.t2 + p.t1 * emk,
         p.t1 + p.t2 * ek, I_unit * p.eps_b, -I_unit * p.t3,
         p.t2 + p.t1 * ek, I_unit * p.t3, I_unit * p.eps_b;
    return h;
}

/// Four-band depleted Creutz ladder, order (a, u, v, b).
inline ComplexMatrix bloch_nhssh(const SSHParams& sp, double k) {
    const auto& p = sp.hn;
    const cplx ek = std::exp(I_unit * k);
    const cplx emk = std::exp(-I_unit * k);
    ComplexMatrix h(4, 4);
    h << I_unit * p.eps_a, p.t1, p.t2, I_unit * p.t2 + sp.w * emk,
         p.t1, I_unit * p.eps_b, -I_unit * p.t3, p.t2,
         p.t2, I_unit * p.t3, I_unit * p.eps_b, p.t1,
         -I_unit * p.t2 + sp.w * ek, p.t2, p.t1, I_unit * p.eps_a;
    return h;
}

/// Real-space form of bloch_hn. Each cell holds a red site a_n and the pair
/// (u_n, v_n) that links a_{n-1} to a_n, so an open chain ends on a red site
/// with a single pair at the right boundary. Gauge-equivalent to bloch_hn.
inline LatticeSpec hn_lattice(const HNParams& p, std::size_t n_cells, Boundary b) {
    LatticeSpec s;
    s.cell.resize(3, 3);
    s.cell << I_unit * p.eps_a, p.t2, p.t1,
              p.t2, I_unit * p.eps_b, -I_unit * p.t3,
              p.t1, I_unit * p.t3, I_unit * p.eps_b;
    s.forward = ComplexMatrix::Zero(3, 3);
    s.forward(0, 0) = I_unit * p.t2;
    s.forward(0, 1) = p.t1;
    s.forward(0, 2) = p.t2;
    s.n_cells = n_cells;
    s.boundary = b;
    s.red_sites = {0};
    return s;
}

inline LatticeSpec nhssh_lattice(const SSHParams& sp, std::size_t n_cells, Boundary b) {
    const auto& p = sp.hn;
    LatticeSpec s;
    s.cell.resize(4, 4);
    s.cell << I_unit * p.eps_a, p.t1, p.t2, I_unit * p.t2,
              p.t1, I_unit * p.eps_b, -I_unit * p.t3, p.t2,
              p.t2, I_unit * p.t3, I_unit * p.eps_b, p.t1,
              -I_unit * p.t2, p.t2, p.t1, I_unit * p.eps_a;
    s.forward = ComplexMatrix::Zero(4, 4);
    s.forward(3, 0) = sp.w;
    s.n_cells = n_cells;
    s.boundary = b;
    s.red_sites = {0, 3};
    return s;
}

// ---------------------------------------------------------------------------
// Effective (reduced) models

struct EffectiveValues {
    cplx a;
    cplx v;
    cplx g;
    cplx t_plus() const { return v + g; }
    cplx t_minus() const { return v - g; }
};

/// Energy-dependent on-site A(E) and hoppings T+-(E) = v(E) +- g(E) of a reduced chain.
class EffectiveModel {
public:
    using Evaluator = std::function<EffectiveValues(cplx)>;

    EffectiveModel(ModelKind kind, Evaluator eval, std::vector<cplx> poles, double guard)
        : kind_(kind), eval_(std::move(eval)), poles_(std::move(poles)), guard_(guard) {}

    ModelKind kind() const { return kind_; }
    const std::vector<cplx>& pole_set() const { return poles_; }
    double pole_guard() const { return guard_; }

    double pole_distance(cplx e) const {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& p : poles_) d = std::min(d, std::abs(e - p));
        return d;
    }

    EffectiveValues evaluate(cplx e) const {
        if (pole_distance(e) <= guard_) throw PoleProximityError("effective model evaluated within the pole guard");
        return eval_(e);
    }

    cplx a_of_e(cplx e) const { return evaluate(e).a; }
    cplx v_of_e(cplx e) const { return evaluate(e).v; }
    cplx g_of_e(cplx e) const { return evaluate(e).g; }
    cplx t_plus(cplx e) const { return evaluate(e).t_plus(); }
    cplx t_minus(cplx e) const { return evaluate(e).t_minus(); }

    /// 2x2 reduced Bloch matrix of the SSH-type chain at energy e.
    ComplexMatrix bloch_ssh(cplx e, double w, double k) const {
        auto ev = evaluate(e);
        ComplexMatrix h(2, 2);
        h << ev.a, ev.t_plus() + w * std::exp(-I_unit * k),
             ev.t_minus() + w * std::exp(I_unit * k), ev.a;
        return h;
    }

private:
    ModelKind kind_;
    Evaluator eval_;
    std::vector<cplx> poles_;
    double guard_;
};

inline constexpr double closed_form_guard = 1e-10;

inline std::vector<cplx> hn_poles(const HNParams& p) {
    return {cplx(-std::abs(p.t3), p.eps_b), cplx(std::abs(p.t3), p.eps_b)};
}

/// Closed-form A, v, g of the reduced three-band (HN) and four-band (SSH) lattices.
inline EffectiveModel effective_params(const HNParams& p, ModelKind kind) {
    const double factor = kind == ModelKind::HN ? 2.0 : 1.0;
    auto eval = [p, factor](cplx e) {
        const cplx z = p.eps_b + I_unit * e;
        const cplx d = z * z + p.t3 * p.t3;
        EffectiveValues out;
        out.a = I_unit * (p.eps_a + factor * z * (p.t1 * p.t1 + p.t2 * p.t2) / d);
        out.v = 2.0 * I_unit * z * p.t1 * p.t2 / d;
        out.g = I_unit * (p.t2 * p.t3 * (p.t3 - p.t2) + p.t2 * z * z + p.t1 * p.t1 * p.t3) / d;
        return out;
    };
    return EffectiveModel(kind, eval, hn_poles(p), closed_form_guard);
}

inline EffectiveModel effective_params(const SSHParams& p) { return effective_params(p.hn, ModelKind::SSH); }

/// Closed form of the three-site reduction: A/2 = 1/(E - i alpha), T+- = 1 + e^{+-i phi}/(E - i alpha).
inline EffectiveModel effective_three_site(double phi, double alpha) {
    auto eval = [phi, alpha](cplx e) {
        const cplx r = 1.0 / (e - I_unit * alpha);
        EffectiveValues out;
        out.a = 2.0 * r;
        out.v = 1.0 + std::cos(phi) * r;
        out.g = I_unit * std::sin(phi) * r;
        return out;
    };
    return EffectiveModel(ModelKind::HN, eval, {cplx(0.0, alpha)}, closed_form_guard);
}

namespace detail {

inline std::vector<cplx> to_vector(const ComplexVector& v) {
    return std::vector<cplx>(v.data(), v.data() + v.size());
}

} // namespace detail

/// Effective model obtained numerically from the reduction of a lattice onto its
/// red sites. HN kind (one red site per cell): A, T+ and T- are read off the
/// middle of a three-cell open chain. SSH kind (two red sites per cell, all
/// other sites intra-cell): read off the reduction of a single cell.
inline EffectiveModel effective_from_lattice(const LatticeSpec& spec, ModelKind kind) {
    spec.validate();
    if (kind == ModelKind::HN) {
        if (spec.red_sites.size() != 1) throw std::invalid_argument("effective_from_lattice: HN kind needs one red site per cell");
        LatticeSpec chain = spec.with(3, Boundary::OBC);
        auto op = std::make_shared<isr::ReducedOperator>(isr::reduce(realspace(chain), red_indices(chain)));
        auto eval = [op](cplx e) {
            ComplexMatrix r = op->evaluate(e);
            EffectiveValues out;
            out.a = r(1, 1);
            out.v = 0.5 * (r(1, 2) + r(2, 1));
            out.g = 0.5 * (r(1, 2) - r(2, 1));
            return out;
        };
        return EffectiveModel(kind, eval, detail::to_vector(op->pole_set()), isr::pole_guard);
    }
    if (spec.red_sites.size() != 2) throw std::invalid_argument("effective_from_lattice: SSH kind needs two red sites per cell");
    auto reds = spec.red_sites;
    std::sort(reds.begin(), reds.end());
    const bool swapped = reds[0] != spec.red_sites[0];
    auto op = std::make_shared<isr::ReducedOperator>(isr::reduce(spec.cell, reds));
    auto eval = [op, swapped](cplx e) {
        ComplexMatrix r = op->evaluate(e);
        const cplx ab = swapped ? r(1, 0) : r(0, 1);
        const cplx ba = swapped ? r(0, 1) : r(1, 0);
        EffectiveValues out;
        out.a = 0.5 * (r(0, 0) + r(1, 1));
        out.v = 0.5 * (ab + ba);
        out.g = 0.5 * (ab - ba);
        return out;
    };
    return EffectiveModel(kind, eval, detail::to_vector(op->pole_set()), isr::pole_guard);
}

// ---------------------------------------------------------------------------
// Construction principles

/// Principle A: cell (r, c, C...). r couples to its own c via e^{i phi}; c couples
/// to the next cell's r via 1; consecutive red sites are linked directly by
/// `direct_hop` (1 in the three-site building block).
inline LatticeSpec build_principle_a(const ComplexMatrix& network_c, const ComplexVector& coupling_c, double phi,
                                     double alpha, std::size_t n_cells, Boundary b, double direct_hop = 1.0) {
    if (network_c.rows() != network_c.cols()) throw std::invalid_argument("build_principle_a: network C must be square");
    if (coupling_c.size() != network_c.rows())
        throw std::invalid_argument("build_principle_a: coupling_c length must equal the size of network C");
    for (Eigen::Index i = 0; i < network_c.rows(); ++i)
        for (Eigen::Index j = 0; j < network_c.cols(); ++j)
            if (i != j && (std::abs(network_c(i, j).imag()) > 1e-14 || std::abs(network_c(i, j) - network_c(j, i)) > 1e-14))
                throw std::invalid_argument("build_principle_a: couplings inside C must be real and symmetric");

    const Eigen::Index m = network_c.rows();
    const Eigen::Index d = 2 + m;
    LatticeSpec s;
    s.cell = ComplexMatrix::Zero(d, d);
    const cplx e = std::exp(I_unit * phi);
    s.cell(0, 1) = e;
    s.cell(1, 0) = std::conj(e);
    s.cell(1, 1) = I_unit * alpha;
    for (Eigen::Index j = 0; j < m; ++j) {
        s.cell(1, 2 + j) = coupling_c(j);
        s.cell(2 + j, 1) = std::conj(coupling_c(j));
    }
    if (m > 0) s.cell.block(2, 2, m, m) = network_c;
    s.forward = ComplexMatrix::Zero(d, d);
    s.forward(1, 0) = 1.0;
    s.forward(0, 0) = direct_hop;
    s.n_cells = n_cells;
    s.boundary = b;
    s.red_sites = {0};
    return s;
}

struct PrincipleBOptions {
    /// Imaginary on-site potential i*red_gain on the red sites.
    double red_gain = 0.0;
    /// Hermitian hopping i*direct_hop between consecutive red sites.
    double direct_hop = 0.0;
};

inline Eigen::MatrixXd require_real_symmetric(const ComplexMatrix& g) {
    if (g.rows() != g.cols() || g.rows() < 2) throw std::invalid_argument("principle B: G must be square with at least two sites");
    if (g.imag().cwiseAbs().maxCoeff() > 1e-14) throw std::invalid_argument("principle B: G must be real");
    Eigen::MatrixXd gr = g.real();
    if ((gr - gr.transpose()).cwiseAbs().maxCoeff() > 1e-14) throw std::invalid_argument("principle B: G must be symmetric");
    return gr;
}

/// G' = G + i eps on u and v, plus -i t3 (u->v) / +i t3 (v->u).
inline ComplexMatrix decorate_g(const ComplexMatrix& g, std::size_t u, std::size_t v, double eps, double t3) {
    ComplexMatrix gp = g;
    const auto iu = static_cast<Eigen::Index>(u), iv = static_cast<Eigen::Index>(v);
    gp(iu, iu) += I_unit * eps;
    gp(iv, iv) += I_unit * eps;
    gp(iu, iv) += -I_unit * t3;
    gp(iv, iu) += I_unit * t3;
    return gp;
}

struct PrincipleBInput {
    ComplexMatrix g;
    std::size_t u = 0;
    std::size_t v = 1;
    double eps = 0.0;
    double t1 = 0.0;
    double t2 = 0.0;
    double t3 = 0.0;
};

inline void check_principle_b(const PrincipleBInput& in) {
    require_real_symmetric(in.g);
    const auto m = static_cast<std::size_t>(in.g.rows());
    if (in.u >= m || in.v >= m) throw std::invalid_argument("principle B: u or v outside G");
    if (in.u == in.v) throw std::invalid_argument("principle B: u and v must differ");
    if (!isr::is_latently_symmetric(in.g, in.u, in.v, 1e-10))
        throw std::invalid_argument("principle B: sites u and v of G are not latently symmetric");
}

/// Two red sites followed by G'. In SSH mode this is one unit cell (a, b, G');
/// in HN mode it is the repeating block (a_n, a_{n+1}, G') joining consecutive red sites.
inline ComplexMatrix principle_b_block(const PrincipleBInput& in, const PrincipleBOptions& opt = {}) {
    check_principle_b(in);
    const Eigen::Index m = in.g.rows();
    ComplexMatrix h = ComplexMatrix::Zero(2 + m, 2 + m);
    h.block(2, 2, m, m) = decorate_g(in.g, in.u, in.v, in.eps, in.t3);
    const auto u = static_cast<Eigen::Index>(in.u) + 2, v = static_cast<Eigen::Index>(in.v) + 2;
    h(0, u) = h(u, 0) = in.t1;
    h(0, v) = h(v, 0) = in.t2;
    h(1, u) = h(u, 1) = in.t2;
    h(1, v) = h(v, 1) = in.t1;
    h(0, 0) = h(1, 1) = I_unit * opt.red_gain;
    h(0, 1) = I_unit * opt.direct_hop;
    h(1, 0) = -I_unit * opt.direct_hop;
    return h;
}

/// Q' = sigma_x (+) Q for principle_b_block, with Q the latent reflection of G.
inline ComplexMatrix principle_b_q(const PrincipleBInput& in) {
    const Eigen::Index m = in.g.rows();
    ComplexMatrix q = ComplexMatrix::Zero(2 + m, 2 + m);
    q(0, 1) = q(1, 0) = 1.0;
    q.block(2, 2, m, m) = isr::latent_reflection(require_real_symmetric(in.g), in.u, in.v).cast<cplx>();
    return q;
}

/// Principle B chains. HN mode: cell (a, G'), a_n couples to its own G' with
/// (t2, t1) on (u, v) and to the next cell's G' with (t1, t2). SSH mode: cell
/// (a, b, G') with the crossed pattern a-u t1, a-v t2, b-u t2, b-v t1 and the
/// inter-cell hopping w from b_n to a_{n+1}.
inline LatticeSpec build_principle_b(const PrincipleBInput& in, std::size_t n_cells, ModelKind mode, double w, Boundary b,
                                     const PrincipleBOptions& opt = {}) {
    check_principle_b(in);
    const Eigen::Index m = in.g.rows();
    const ComplexMatrix gp = decorate_g(in.g, in.u, in.v, in.eps, in.t3);
    const auto u = static_cast<Eigen::Index>(in.u), v = static_cast<Eigen::Index>(in.v);
    LatticeSpec s;
    s.n_cells = n_cells;
    s.boundary = b;
    if (mode == ModelKind::HN) {
        const Eigen::Index d = 1 + m;
        s.cell = ComplexMatrix::Zero(d, d);
        s.cell(0, 0) = I_unit * opt.red_gain;
        s.cell.block(1, 1, m, m) = gp;
        s.cell(0, 1 + u) = s.cell(1 + u, 0) = in.t2;
        s.cell(0, 1 + v) = s.cell(1 + v, 0) = in.t1;
        s.forward = ComplexMatrix::Zero(d, d);
        s.forward(0, 0) = I_unit * opt.direct_hop;
        s.forward(0, 1 + u) = in.t1;
        s.forward(0, 1 + v) = in.t2;
        s.red_sites = {0};
    } else {
        s.cell = principle_b_block(in, opt);
        s.forward = ComplexMatrix::Zero(2 + m, 2 + m);
        s.forward(1, 0) = w;
        s.red_sites = {0, 1};
    }
    return s;
}

// ---------------------------------------------------------------------------
// Latently symmetric graphs with unit couplings (eight sites, cospectral but not
// automorphic pairs u, v), used as G in principle B.

struct GraphEntry {
    std::string name;
    std::size_t n_sites;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::size_t u;
    std::size_t v;

    ComplexMatrix adjacency() const {
        ComplexMatrix a = ComplexMatrix::Zero(static_cast<Eigen::Index>(n_sites), static_cast<Eigen::Index>(n_sites));
        for (auto [i, j] : edges) {
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
            a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
        }
        return a;
    }
};

inline const std::vector<GraphEntry>& latent_graph_catalog() {
    static const std::vector<GraphEntry> catalog{
        {"latent8a", 8, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 7}, {1, 5}, {2, 6}, {6, 7}}, 1, 6},
        {"latent8b", 8, {{0, 1}, {0, 7}, {1, 3}, {1, 6}, {2, 5}, {2, 7}, {4, 5}, {4, 7}}, 0, 5},
        {"latent8c", 8, {{0, 1}, {1, 3}, {2, 3}, {2, 6}, {3, 5}, {4, 5}, {4, 7}, {6, 7}}, 1, 7},
        {"latent8d", 8, {{0, 2}, {0, 3}, {0, 7}, {1, 2}, {1, 4}, {1, 6}, {3, 6}, {3, 7}, {4, 5}, {4, 6}}, 0, 4},
    };
    return catalog;
}

inline const GraphEntry& largest_latent_graph() {
    const auto& cat = latent_graph_catalog();
    return *std::max_element(cat.begin(), cat.end(),
                             [](const GraphEntry& a, const GraphEntry& b) { return a.edges.size() < b.edges.size(); });
}

inline const GraphEntry& find_latent_graph(const std::string& name) {
    for (const auto& g : latent_graph_catalog())
        if (g.name == name) return g;
    throw std::invalid_argument("unknown graph '" + name + "'");
}

} // namespace emergent::models
