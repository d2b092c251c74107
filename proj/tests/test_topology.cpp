#include <emergent/topology.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace emergent;
using namespace emergent::models;
using namespace emergent::topology;

namespace {

const HNParams fig4_hn{0.9, 0.4, 1.0, 0.5, 0.6};
const SSHParams fig4{fig4_hn, 3.0};
const HNParams appb{0.8, 0.5, 1.0, 0.7, 1.6};

LatticeBuilder ssh_builder(const HNParams& hn) {
    return [hn](double w, std::size_t n, Boundary b) { return nhssh_lattice({hn, w}, n, b); };
}

PrincipleBInput fig6_input() {
    const auto& g = largest_latent_graph();
    return {g.adjacency(), g.u, g.v, 0.5, 1.0, 0.7, 0.6};
}

const PrincipleBOptions fig6_options{0.3, 0.4};

} // namespace

TEST(Cubic, VanishingGainRoots) {
    const SSHParams p{{0.0, 0.0, 1.0, 1.0, 1.0}, 1.0};
    auto cf = cubic_closed_form(p.hn);
    EXPECT_NEAR(std::abs(cf.a_coef), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(cf.c_coef), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(cf.b_coef + 3.0), 0.0, 1e-15);
    auto te = transition_energies(p);
    ASSERT_EQ(te.energies.size(), 3u);
    EXPECT_NEAR(std::abs(te.energies[0] + std::sqrt(3.0)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(te.energies[1]), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(te.energies[2] - std::sqrt(3.0)), 0.0, 1e-12);
    EXPECT_LT(te.method_agreement, 1e-9);
}

TEST(Cubic, Fig4ClosedFormMatchesCompanion) {
    auto te = transition_energies(fig4);
    ASSERT_EQ(te.energies.size(), 3u);
    EXPECT_LT(te.method_agreement, 1e-9);
    EXPECT_LT(te.max_residual, 1e-9);
    auto cf = cubic_closed_form(fig4_hn);
    for (const auto& e : cf.roots) EXPECT_LT(std::abs(numerics::poly_eval(cf.coefficients_ascending(), e)), 1e-9);
    // Frozen values: +-1.23639 + 0.59252i and 0.51496i.
    EXPECT_NEAR(te.energies[0].real(), -1.2363946372, 1e-9);
    EXPECT_NEAR(te.energies[0].imag(), 0.5925190186, 1e-9);
    EXPECT_NEAR(std::abs(te.energies[1] - cplx(0.0, 0.5149619628)), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(te.energies[2] + std::conj(te.energies[0])), 0.0, 1e-12);
}

TEST(Cubic, RandomParametersAgree) {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (int i = 0; i < 50; ++i) {
        const SSHParams p{{d(rng), d(rng), d(rng), d(rng), d(rng)}, 1.0};
        auto te = transition_energies(p);
        EXPECT_LT(te.method_agreement, 1e-8 * std::max(1.0, std::abs(te.energies.back())));
    }
}

TEST(TransitionEnergies, GenericPathReproducesCubic) {
    auto spec = nhssh_lattice(fig4, 2, Boundary::OBC);
    auto generic = transition_energies_generic(spec, effective_from_lattice(spec, ModelKind::SSH));
    auto te = transition_energies(fig4);
    EXPECT_EQ(generic.polynomial_degree, 3u);
    ASSERT_EQ(generic.energies.size(), 3u);
    double worst = 0.0;
    match_order(te.energies, generic.energies, worst);
    EXPECT_LT(worst, 1e-9);
}

TEST(TransitionEnergies, Fig6AnalogHasNineRoots) {
    auto spec = build_principle_b(fig6_input(), 2, ModelKind::SSH, 1.0, Boundary::OBC, fig6_options);
    auto model = effective_from_lattice(spec, ModelKind::SSH);
    auto te = transition_energies_generic(spec, model);
    EXPECT_EQ(te.polynomial_degree, 9u);
    EXPECT_EQ(te.energies.size(), 9u);
    EXPECT_LT(te.max_residual, 1e-8);
    for (const auto& e : te.energies) EXPECT_LT(std::abs(model.a_of_e(e) - e), 1e-8);
}

TEST(Winding, DecoupledCellsAreTrivial) {
    auto model = effective_params(fig4);
    for (const auto& e : transition_energies(fig4).energies) {
        EXPECT_NEAR(winding_numeric(model, 0.0, e), 0.0, 1e-12);
        EXPECT_EQ(winding_analytic(model, 0.0, e).winding, 0);
        EXPECT_EQ(winding_analytic(model, 1e6, e).winding, 1);
    }
}

TEST(Winding, Fig4AtW3) {
    auto te = transition_energies(fig4);
    for (const auto& e : te.energies) {
        EXPECT_NEAR(winding_numeric(fig4, e), 1.0, 1e-3);
        EXPECT_EQ(winding_analytic(fig4, e).winding, 1);
    }
    auto model = effective_params(fig4);
    EXPECT_NEAR(critical_w(model, te.energies[0]), 1.0117172134, 1e-9);
    EXPECT_NEAR(critical_w(model, te.energies[1]), 1.6776918879, 1e-9);
}

TEST(Winding, AgreesWithAnalyticAcrossTransition) {
    auto model = effective_params(fig4);
    for (const auto& e : transition_energies(fig4).energies) {
        const double wc = critical_w(model, e);
        for (int i = 0; i < 20; ++i) {
            const double w = 0.05 + 3.9 * i / 19.0;
            if (std::abs(w - wc) < 0.02) continue;
            const double wn = winding_numeric(model, w, e);
            EXPECT_NEAR(wn, winding_analytic(model, w, e).winding, 1e-3) << "w = " << w;
            EXPECT_NEAR(wn, winding_numeric(model, w, e, 1024, -1), 1e-12);
        }
    }
}

TEST(Winding, Preconditions) {
    auto model = effective_params(fig4);
    const cplx e = transition_energies(fig4).energies[0];
    EXPECT_THROW(winding_numeric(model, 3.0, e + 0.1), std::invalid_argument);
    EXPECT_THROW(winding_numeric(model, 3.0, e, 32), std::invalid_argument);
    EXPECT_THROW(winding_analytic(model, critical_w(model, e), e), NumericError);
}

TEST(Winding, GapClosingOnGridIsReported) {
    EffectiveModel model(
        ModelKind::SSH, [](cplx e) { return EffectiveValues{e, 1.0, 0.0}; }, {}, closed_form_guard);
    // a = 1 and w = 1 close the gap at k = pi, which lies on the uniform grid.
    EXPECT_THROW(winding_numeric(model, 1.0, 0.0, 64), SingularMatrixError);
}

TEST(EdgeModes, Fig4PairsAtW3AndNoneAtSmallW) {
    auto te = transition_energies(fig4);
    auto model = effective_params(fig4);
    auto at3 = find_edge_modes(nhssh_lattice(fig4, 35, Boundary::OBC), te.energies, model, 3.0);
    ASSERT_EQ(at3.pairs.size(), 3u);
    for (const auto& p : at3.pairs) EXPECT_LT(p.splitting, 1e-3);
    SSHParams small = fig4;
    small.w = 0.1;
    auto at01 = find_edge_modes(nhssh_lattice(small, 35, Boundary::OBC), te.energies, model, 0.1);
    EXPECT_TRUE(at01.pairs.empty());
    for (const auto& note : at01.notes) EXPECT_EQ(note, "not in topological phase at this E_t");
    EXPECT_THROW(find_edge_modes(nhssh_lattice(fig4, 35, Boundary::PBC), te.energies, model, 3.0), std::invalid_argument);
}

TEST(EdgeModes, Fig3SetsHaveThreePairs) {
    for (const auto& hn : {HNParams{0.9, 0.4, 0.0, 0.5, 0.6}, HNParams{0.9, 0.4, 1.0, 0.5, 0.9}, HNParams{0.9, 0.4, 0.2, 0.5, 0.2}}) {
        const SSHParams p{hn, 1.8};
        auto search = find_edge_modes(nhssh_lattice(p, 35, Boundary::OBC), transition_energies(p).energies, effective_params(p), 1.8);
        EXPECT_EQ(search.pairs.size(), 3u);
        for (const auto& pair : search.pairs) EXPECT_LT(pair.splitting, 1e-3);
    }
}

TEST(EdgeModes, SplittingDecaysWithSize) {
    auto te = transition_energies(fig4);
    auto model = effective_params(fig4);
    SSHParams p = fig4;
    p.w = 2.0;
    std::vector<double> split;
    for (std::size_t n : {15u, 25u, 35u}) {
        auto search = find_edge_modes(nhssh_lattice(p, n, Boundary::OBC), te.energies, model, p.w);
        ASSERT_FALSE(search.pairs.empty());
        split.push_back(search.pairs.front().splitting);
    }
    EXPECT_LE(split[1], 1.1 * split[0] + 1e-15);
    EXPECT_LE(split[2], 1.1 * split[1] + 1e-15);
}

TEST(Depths, SymmetricHoppingsAndSigns) {
    EffectiveModel sym(
        ModelKind::SSH, [](cplx e) { return EffectiveValues{e, 0.7, 0.0}; }, {}, closed_form_guard);
    auto d = penetration_depths(sym, 2.0, 0.3);
    EXPECT_DOUBLE_EQ(d.xi_l, d.xi_r);
    EXPECT_NEAR(d.xi_lr, 1.0 / d.xi_l + 1.0 / d.xi_r, 1e-14);
    EXPECT_THROW(penetration_depths(sym, 0.7, 0.3), NumericError);

    for (const auto& e : transition_energies(fig4).energies) {
        auto de = penetration_depths(fig4, e);
        EXPECT_LT(de.xi_l, 0.0);
        EXPECT_LT(de.xi_r, 0.0);
    }
}

TEST(Envelope, SyntheticExponential) {
    const double xi = 3.5;
    const Eigen::Index n = 60;
    ComplexVector psi(n);
    for (Eigen::Index j = 0; j < n; ++j) psi(j) = std::exp(-static_cast<double>(j) / (2.0 * xi));
    // q_j = |psi_j| decays at 1/(2 xi).
    EXPECT_LT(envelope_check(psi, psi, xi), 1e-6);
    EXPECT_TRUE(std::isinf(envelope_check(ComplexVector::Ones(n), ComplexVector::Ones(n), xi)));
    EXPECT_THROW(envelope_check(ComplexVector::Zero(n), ComplexVector::Zero(n), xi), std::invalid_argument);
}

TEST(Envelope, MirroredProfileIsFittedFromTheRight) {
    const Eigen::Index n = 40;
    ComplexVector psi(n);
    for (Eigen::Index j = 0; j < n; ++j) psi(j) = std::exp(-0.3 * static_cast<double>(n - 1 - j));
    auto fit = fit_envelope(biorthogonal_profile(psi, psi, 1));
    EXPECT_TRUE(fit.right_edge);
    EXPECT_NEAR(fit.rate, 0.3, 1e-10);
}

TEST(Envelope, CellSumsInProfile) {
    ComplexVector l(4), r(4);
    l << 1.0, 2.0, 0.0, 1.0;
    r << 3.0, cplx(0.0, 1.0), 4.0, 0.0;
    auto q = biorthogonal_profile(l, r, 2);
    ASSERT_EQ(q.size(), 2u);
    EXPECT_NEAR(q[0], std::sqrt(std::abs(cplx(3.0, 2.0))), 1e-15);
    EXPECT_NEAR(q[1], 0.0, 1e-15);
    EXPECT_THROW(biorthogonal_profile(l, r, 3), std::invalid_argument);
}

TEST(Analyze, Fig4EnvelopesAtW3) {
    auto te = transition_energies(fig4);
    auto rep = analyze(ssh_builder(fig4_hn), effective_params(fig4), te.energies, 3.0, 35);
    ASSERT_EQ(rep.edge_modes.size(), 3u);
    for (std::size_t p = 0; p < rep.envelopes.size(); ++p) {
        ASSERT_EQ(rep.envelopes[p].size(), 2u);
        bool left = false, right = false;
        for (const auto& env : rep.envelopes[p]) {
            EXPECT_LT(env.fit_error(), 0.15);
            left = left || !env.right_edge;
            right = right || env.right_edge;
        }
        EXPECT_TRUE(left && right) << "pair " << p << " should have one mode per edge";
    }
}

TEST(PhaseSweep, LongSweepThreePhases) {
    const auto te = transition_energies({appb, 0.0});
    auto table = phase_sweep(ssh_builder(appb), effective_params(appb, ModelKind::SSH), te.energies, 0.0, 3.0, 31, 50);
    EXPECT_EQ(table.phases, (std::vector<std::size_t>{0, 1, 3}));
    for (std::size_t t = 0; t < te.energies.size(); ++t) {
        const auto [tp, tm] = table.pbc_closings[t];
        EXPECT_GT(std::abs(tp - table.critical_w[t]), 1e-3);
        EXPECT_GT(std::abs(tm - table.critical_w[t]), 1e-3);
    }
}

TEST(PhaseSweep, BelowAllCriticalCouplings) {
    const auto te = transition_energies(fig4);
    auto table = phase_sweep(ssh_builder(fig4_hn), effective_params(fig4), te.energies, 0.0, 0.5, 6, 20);
    for (const auto& row : table.rows) EXPECT_EQ(row.edge_count(), 0u);
    EXPECT_THROW(phase_sweep(ssh_builder(fig4_hn), effective_params(fig4), te.energies, 0.0, 1.0, 1, 20), std::invalid_argument);
}

TEST(PhaseSweep, Fig6AnalogPairsAtSubsetOfRoots) {
    auto in = fig6_input();
    auto build = [in](double w, std::size_t n, Boundary b) { return build_principle_b(in, n, ModelKind::SSH, w, b, fig6_options); };
    auto spec = build(1.0, 2, Boundary::OBC);
    auto model = effective_from_lattice(spec, ModelKind::SSH);
    auto te = transition_energies_generic(spec, model);
    auto rep = analyze(build, model, te.energies, 1.0, 30);
    EXPECT_GT(rep.edge_modes.size(), 0u);
    EXPECT_LT(rep.edge_modes.size(), te.energies.size());
    for (const auto& pair : rep.edge_modes) EXPECT_EQ(rep.windings[pair.et_index], 1);
}
