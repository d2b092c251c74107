#pragma once

#include "config.hpp"
#include "isr.hpp"
#include "models.hpp"
#include "nhse.hpp"
#include "topology.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef EMERGENT_VERSION
#define EMERGENT_VERSION "1.0.0"
#endif

namespace emergent::cli {

using models::Boundary;
using models::ModelKind;

// ---------------------------------------------------------------------------
// Output helpers

/// Shortest representation that reads back to the same double.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : columns_(header.size()) { row_strings(header); }

    template <class... Cells>
    void row(const Cells&... cells) {
        std::vector<std::string> out;
        (out.push_back(cell(cells)), ...);
        if (out.size() != columns_) throw std::logic_error("CsvTable: wrong number of cells");
        row_strings(out);
    }

    std::string str() const { return body_.str(); }
    std::size_t rows() const { return rows_; }

private:
    static std::string cell(double x) { return format_double(x); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    template <class Int, std::enable_if_t<std::is_integral_v<Int>, int> = 0>
    static std::string cell(Int i) {
        return std::to_string(i);
    }

    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) body_ << (i ? "," : "") << cells[i];
        body_ << '\n';
        ++rows_;
    }

    std::size_t columns_;
    std::size_t rows_ = 0;
    std::ostringstream body_;
};

/// Writes to a temporary sibling and renames it over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json versions_json() {
    std::ostringstream eigen;
    eigen << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "." << EIGEN_MINOR_VERSION;
    std::ostringstream nl;
    nl << NLOHMANN_JSON_VERSION_MAJOR << "." << NLOHMANN_JSON_VERSION_MINOR << "." << NLOHMANN_JSON_VERSION_PATCH;
    return {{"emergent", EMERGENT_VERSION}, {"eigen", eigen.str()}, {"nlohmann_json", nl.str()}, {"cxx", __cplusplus}};
}

/// Runs fn, prefixing any numeric failure with the stage name.
template <class Fn>
auto stage(const std::string& what, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const SingularMatrixError& e) {
        throw SingularMatrixError(what + ": " + e.what());
    } catch (const PoleProximityError& e) {
        throw PoleProximityError(what + ": " + e.what());
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(what + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(what + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Model setup

struct ModelSetup {
    std::string name;
    ModelKind kind = ModelKind::HN;
    /// three_site is a single finite block rather than a chain.
    std::optional<ComplexMatrix> finite;
    topology::LatticeBuilder build;
    std::optional<models::EffectiveModel> effective;
    std::optional<models::HNParams> hn;
    double w = 0.0;
    std::optional<models::PrincipleBInput> principle_b;
    models::PrincipleBOptions principle_b_options;

    bool is_ssh() const { return kind == ModelKind::SSH; }
};

inline models::HNParams hn_params(const RunConfig& c) {
    return {c.param("eps_a"), c.param("eps_b"), c.param("t1"), c.param("t2"), c.param("t3")};
}

inline ModelSetup make_setup(const RunConfig& c) {
    ModelSetup s;
    s.name = c.model;
    if (c.model == "three_site") {
        const double phi = c.param("phi"), alpha = c.param("alpha");
        s.finite = models::build_three_site(phi, alpha);
        s.effective = models::effective_three_site(phi, alpha);
    } else if (c.model == "hatano_nelson") {
        auto p = hn_params(c);
        s.hn = p;
        s.build = [p](double, std::size_t n, Boundary b) { return models::hn_lattice(p, n, b); };
        s.effective = models::effective_params(p, ModelKind::HN);
    } else if (c.model == "nh_ssh") {
        models::SSHParams p{hn_params(c), c.param("w")};
        s.kind = ModelKind::SSH;
        s.hn = p.hn;
        s.w = p.w;
        s.build = [p](double w, std::size_t n, Boundary b) {
            auto q = p;
            q.w = w;
            return models::nhssh_lattice(q, n, b);
        };
        s.effective = models::effective_params(p);
    } else if (c.model == "principle_a") {
        const double phi = c.param("phi"), alpha = c.param("alpha");
        const auto m = static_cast<Eigen::Index>(c.param("network_size", 0.0));
        const double coupling = c.param("network_coupling", 1.0);
        const double direct = c.param("direct_hop", 1.0);
        ComplexMatrix net = ComplexMatrix::Zero(m, m);
        for (Eigen::Index i = 0; i + 1 < m; ++i) net(i, i + 1) = net(i + 1, i) = 1.0;
        ComplexVector link = ComplexVector::Zero(m);
        if (m > 0) link(0) = coupling;
        s.build = [=](double, std::size_t n, Boundary b) { return models::build_principle_a(net, link, phi, alpha, n, b, direct); };
        s.effective = models::effective_from_lattice(s.build(0.0, 3, Boundary::OBC), ModelKind::HN);
    } else if (c.model == "principle_b") {
        const auto& g = c.graph ? models::find_latent_graph(*c.graph) : models::largest_latent_graph();
        models::PrincipleBInput in{g.adjacency(), g.u, g.v, c.param("eps"), c.param("t1"), c.param("t2"), c.param("t3")};
        models::PrincipleBOptions opt{c.param("red_gain", 0.0), c.param("direct_hop", 0.0)};
        s.kind = c.mode.value_or("ssh") == "hn" ? ModelKind::HN : ModelKind::SSH;
        s.w = c.param("w", 0.0);
        s.principle_b = in;
        s.principle_b_options = opt;
        const auto kind = s.kind;
        s.build = [in, opt, kind](double w, std::size_t n, Boundary b) { return models::build_principle_b(in, n, kind, w, b, opt); };
        s.effective = models::effective_from_lattice(s.build(s.w, 3, Boundary::OBC), kind);
    } else {
        throw ConfigError("model: unknown model '" + c.model + "'");
    }
    return s;
}

inline std::vector<cplx> transition_energies_for(const ModelSetup& s, json& results) {
    if (s.name == "nh_ssh") {
        auto te = topology::transition_energies(models::SSHParams{*s.hn, s.w});
        results["closed_form_vs_companion"] = te.method_agreement;
        results["max_root_residual"] = te.max_residual;
        return te.energies;
    }
    auto te = topology::transition_energies_generic(s.build(s.w, 2, Boundary::OBC), *s.effective);
    results["polynomial_degree"] = te.polynomial_degree;
    results["polynomial_vs_eig"] = te.eig_cross_check;
    results["max_root_residual"] = te.max_residual;
    return te.energies;
}

inline std::vector<Boundary> boundaries(const RunConfig& c) {
    if (c.boundary == "both") return {Boundary::OBC, Boundary::PBC};
    return {c.boundary == "pbc" ? Boundary::PBC : Boundary::OBC};
}

/// Deterministic probe energies on a circle, skipping points near poles.
inline std::vector<cplx> probe_energies(const models::EffectiveModel* model, std::size_t n = 24) {
    std::vector<cplx> out;
    for (std::size_t j = 0; j < n; ++j) {
        const double th = 2.0 * std::numbers::pi * (static_cast<double>(j) + 0.37) / static_cast<double>(n);
        const cplx e = cplx(0.05, 0.11) + 1.3 * std::exp(I_unit * th);
        if (model && model->pole_distance(e) < 1e-3) continue;
        out.push_back(e);
    }
    return out;
}

struct TaskOutput {
    std::vector<std::pair<std::string, std::string>> files; // suffix, content
    json results = json::object();
    std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Tasks

inline TaskOutput task_spectrum(const RunConfig& c, const ModelSetup& s) {
    TaskOutput out;
    CsvTable csv({"E_re", "E_im", "boundary", "label", "kappa"});
    if (s.finite) {
        auto ev = stage("spectrum: eig of the three-site block", [&] { return numerics::eigvals(*s.finite); });
        for (Eigen::Index i = 0; i < ev.size(); ++i)
            csv.row(ev(i).real(), ev(i).imag(), std::string("obc"), std::string("bulk"), nhse::kappa_or_nan(*s.effective, ev(i)));
        out.results["n_states"] = ev.size();
        out.files.emplace_back(".csv", csv.str());
        return out;
    }

    std::vector<cplx> obc_values, pbc_values;
    for (auto b : boundaries(c)) {
        const auto spec = s.build(s.w, c.n_cells, b);
        nhse::SpectrumOptions opt;
        std::vector<cplx> e_ts;
        if (b == Boundary::OBC && s.is_ssh()) {
            e_ts = stage("spectrum: transition energies", [&] { return transition_energies_for(s, out.results); });
            auto search = stage("spectrum: edge-mode search",
                                [&] { return topology::find_edge_modes(spec, e_ts, *s.effective, s.w); });
            for (const auto& p : search.pairs) {
                opt.edge_indices.push_back(p.first);
                opt.edge_indices.push_back(p.second);
            }
            out.results["edge_pairs"] = search.pairs.size();
        }
        auto res = stage("spectrum: eigendecomposition (" + models::to_string(b) + ")",
                         [&] { return nhse::compute_spectrum(spec, &*s.effective, opt); });
        const std::string bname = models::to_string(b);
        for (std::size_t i = 0; i < res.size(); ++i) {
            const cplx e = res.eigenvalues(static_cast<Eigen::Index>(i));
            csv.row(e.real(), e.imag(), bname, nhse::to_string(res.labels[i]), res.kappa[i]);
        }
        auto& r = out.results[bname];
        r["n_states"] = res.size();
        for (auto l : {nhse::Label::LeftLocalized, nhse::Label::RightLocalized, nhse::Label::Bulk, nhse::Label::Edge})
            r["count_" + nhse::to_string(l)] = res.count(l);
        const auto defective = std::count(res.near_defective.begin(), res.near_defective.end(), true);
        if (defective > 0)
            out.warnings.push_back(std::to_string(defective) + " near-defective eigenpairs (" + bname +
                                   "); biorthogonal normalization skipped for them");
        auto values = nhse::to_std(res.eigenvalues);
        r["phs_dagger_defect"] = nhse::phs_dagger_defect(values);
        (b == Boundary::OBC ? obc_values : pbc_values) = std::move(values);
    }
    if (!obc_values.empty()) {
        auto curve = stage("spectrum: PBC curve", [&] { return nhse::pbc_curve(s.build(s.w, c.n_cells, Boundary::PBC), 512); });
        out.results["hausdorff_obc_to_pbc_curve"] = nhse::hausdorff_directed(obc_values, curve);
    }
    if (s.hn) out.results["nhse_present"] = nhse::nhse_present(*s.hn);
    out.files.emplace_back(".csv", csv.str());
    return out;
}

inline TaskOutput task_kappa_map(const RunConfig& c, const ModelSetup& s) {
    TaskOutput out;
    nhse::Grid grid;
    if (c.grid) {
        grid = {c.grid->re_min, c.grid->re_max, c.grid->im_min, c.grid->im_max, c.grid->n_re, c.grid->n_im};
    } else {
        std::vector<cplx> pts = s.finite ? nhse::to_std(numerics::eigvals(*s.finite))
                                         : stage("kappa_map: PBC curve",
                                                 [&] { return nhse::pbc_curve(s.build(s.w, c.n_cells, Boundary::PBC), 512); });
        grid = nhse::padded_grid(pts);
    }
    auto map = nhse::compute_kappa_map(*s.effective, grid);
    CsvTable csv({"E_re", "E_im", "kappa"});
    std::size_t undefined = 0;
    for (std::size_t ii = 0; ii < grid.n_im; ++ii)
        for (std::size_t ir = 0; ir < grid.n_re; ++ir) {
            const cplx e = grid.point(ir, ii);
            const double k = map.at(ir, ii);
            if (std::isnan(k)) ++undefined;
            csv.row(e.real(), e.imag(), k);
        }
    out.files.emplace_back(".csv", csv.str());
    out.results["grid"] = {{"re_min", grid.re_min}, {"re_max", grid.re_max}, {"im_min", grid.im_min},
                           {"im_max", grid.im_max}, {"n_re", grid.n_re},     {"n_im", grid.n_im}};
    out.results["undefined_points"] = undefined;
    if (c.contours) {
        auto curves = nhse::kappa_zero_contours(*s.hn, grid.re_min, grid.re_max, grid.n_re);
        CsvTable ccsv({"branch", "E_re", "E_im"});
        double worst = 0.0;
        for (const auto& curve : curves)
            for (const auto& e : curve.points) {
                ccsv.row(curve.branch, e.real(), e.imag());
                const double k = nhse::kappa_or_nan(*s.effective, e);
                if (std::isfinite(k)) worst = std::max(worst, std::abs(k));
            }
        out.files.emplace_back(".contours.csv", ccsv.str());
        out.results["max_abs_kappa_on_contours"] = worst;
    }
    return out;
}

inline TaskOutput task_winding_sweep(const RunConfig& c, const ModelSetup& s) {
    TaskOutput out;
    auto e_ts = stage("winding_sweep: transition energies", [&] { return transition_energies_for(s, out.results); });
    std::vector<double> wc;
    json ets = json::array();
    for (const auto& e : e_ts) {
        wc.push_back(topology::critical_w(*s.effective, e));
        ets.push_back(complex_json(e));
    }
    out.results["transition_energies"] = ets;
    out.results["critical_w"] = wc;
    const auto& sw = *c.sweep;
    std::vector<std::vector<double>> values(sw.n_w, std::vector<double>(e_ts.size(), 0.0));
    parallel_for(
        sw.n_w,
        [&](std::size_t i) {
            const double w = sw.w_min + (sw.w_max - sw.w_min) * static_cast<double>(i) / static_cast<double>(sw.n_w - 1);
            for (std::size_t t = 0; t < e_ts.size(); ++t) {
                try {
                    values[i][t] = topology::winding_numeric(*s.effective, w, e_ts[t], c.n_k);
                } catch (const SingularMatrixError&) {
                    values[i][t] = std::numeric_limits<double>::quiet_NaN();
                }
            }
        },
        c.threads);
    CsvTable csv({"w", "E_t_index", "winding", "w_c"});
    std::size_t at_transition = 0;
    for (std::size_t i = 0; i < sw.n_w; ++i) {
        const double w = sw.w_min + (sw.w_max - sw.w_min) * static_cast<double>(i) / static_cast<double>(sw.n_w - 1);
        for (std::size_t t = 0; t < e_ts.size(); ++t) {
            if (std::isnan(values[i][t])) ++at_transition;
            csv.row(w, t, values[i][t], wc[t]);
        }
    }
    if (at_transition > 0)
        out.warnings.push_back(std::to_string(at_transition) + " sweep points sit exactly at a gap closing (winding reported as nan)");
    out.files.emplace_back(".csv", csv.str());
    return out;
}

inline TaskOutput task_edge_modes(const RunConfig& c, const ModelSetup& s) {
    TaskOutput out;
    auto e_ts = stage("edge_modes: transition energies", [&] { return transition_energies_for(s, out.results); });
    auto rep = stage("edge_modes: analysis", [&] { return topology::analyze(s.build, *s.effective, e_ts, s.w, c.n_cells, c.n_k); });
    CsvTable csv({"E_t_re", "E_t_im", "pair_index", "E_re", "E_im", "xi_l", "xi_r", "xi_lr", "fit_error"});
    json interp = json::array();
    for (std::size_t p = 0; p < rep.edge_modes.size(); ++p) {
        const auto& pair = rep.edge_modes[p];
        const auto& d = rep.depths[p];
        for (const auto& env : rep.envelopes[p]) {
            csv.row(pair.e_t.real(), pair.e_t.imag(), p, env.energy.real(), env.energy.imag(), d.xi_l, d.xi_r, d.xi_lr, env.fit_error());
            interp.push_back(env.better());
        }
    }
    json ets = json::array();
    for (const auto& e : e_ts) ets.push_back(complex_json(e));
    out.results["transition_energies"] = ets;
    out.results["critical_w"] = rep.critical_w;
    out.results["windings_analytic"] = rep.windings;
    out.results["windings_numeric"] = rep.windings_numeric;
    out.results["edge_pairs"] = rep.edge_modes.size();
    out.results["xi_lr_interpretation"] = interp;
    out.results["notes"] = rep.notes;
    out.files.emplace_back(".csv", csv.str());
    return out;
}

inline TaskOutput task_isr_check(const RunConfig& c, const ModelSetup& s) {
    TaskOutput out;
    CsvTable csv({"check", "value"});
    auto record = [&](const std::string& name, double v) {
        csv.row(name, v);
        out.results[name] = v;
    };
    const auto probes = probe_energies(&*s.effective);

    if (s.finite) {
        record("spectrum_preservation_residual", isr::spectrum_preservation_residual(*s.finite, isr::Partition({0, 1}, 3)));
        auto op = isr::reduce(*s.finite, {0, 1});
        double dev = 0.0;
        for (const auto& e : probes) {
            auto ev = s.effective->evaluate(e);
            ComplexMatrix expect(2, 2);
            expect << 0.5 * ev.a, ev.t_plus(), ev.t_minus(), 0.5 * ev.a;
            dev = std::max(dev, (op.evaluate(e) - expect).cwiseAbs().maxCoeff());
        }
        record("closed_form_deviation", dev);
        out.files.emplace_back(".csv", csv.str());
        return out;
    }

    const auto spec = s.build(s.w, c.n_cells, Boundary::OBC);
    const ComplexMatrix h = models::realspace(spec);
    const auto reds = models::red_indices(spec);
    record("spectrum_preservation_residual",
           stage("isr_check: spectrum preservation", [&] {
               return isr::spectrum_preservation_residual(h, isr::Partition(reds, static_cast<std::size_t>(h.rows())));
           }));

    if (s.hn) {
        auto generic = models::effective_from_lattice(s.build(s.w, 3, Boundary::OBC), s.kind);
        double dev = 0.0;
        for (const auto& e : probes) {
            auto a = s.effective->evaluate(e);
            auto b = generic.evaluate(e);
            dev = std::max({dev, std::abs(a.a - b.a), std::abs(a.v - b.v), std::abs(a.g - b.g)});
        }
        record("closed_form_deviation", dev);
    }

    auto chain = isr::reduce(h, reds);
    if (s.name == "principle_a") {
        double worst = 0.0;
        for (const auto& e : probes) {
            if (chain.pole_distance(e) < 1e-3) continue;
            ComplexMatrix r = chain.evaluate(e);
            for (Eigen::Index i = 1; i + 1 < r.rows(); ++i) worst = std::max(worst, std::abs(r(i, i) / r(0, 0) - 2.0));
        }
        record("bulk_to_end_onsite_ratio_deviation", worst);
    }
    if (s.principle_b) {
        const auto& in = *s.principle_b;
        record("latent_symmetry", isr::is_latently_symmetric(in.g, in.u, in.v, 1e-10) ? 1.0 : 0.0);
        const ComplexMatrix block = models::principle_b_block(in, s.principle_b_options);
        record("q_symmetry_residual", isr::check_q_symmetry(block, models::principle_b_q(in)));
        auto op = isr::reduce(block, {0, 1});
        double diag = 0.0, chain_diag = 0.0;
        for (const auto& e : probes) {
            if (op.pole_distance(e) > 1e-3) {
                ComplexMatrix r = op.evaluate(e);
                diag = std::max(diag, std::abs(r(0, 0) - r(1, 1)));
            }
            if (s.is_ssh() && chain.pole_distance(e) > 1e-3) {
                ComplexMatrix r = chain.evaluate(e);
                for (Eigen::Index i = 1; i < r.rows(); ++i) chain_diag = std::max(chain_diag, std::abs(r(i, i) - r(0, 0)));
            }
        }
        record("block_diagonal_mismatch", diag);
        if (s.is_ssh()) record("chain_diagonal_mismatch", chain_diag);
    }
    out.files.emplace_back(".csv", csv.str());
    return out;
}

inline TaskOutput task_phase_sweep(const RunConfig& c, const ModelSetup& s) {
    TaskOutput out;
    auto e_ts = stage("phase_sweep: transition energies", [&] { return transition_energies_for(s, out.results); });
    const auto& sw = *c.sweep;
    auto table = stage("phase_sweep", [&] {
        return topology::phase_sweep(s.build, *s.effective, e_ts, sw.w_min, sw.w_max, sw.n_w, c.n_cells);
    });
    CsvTable csv({"w", "E_re", "E_im", "edge_count"});
    for (const auto& row : table.rows)
        for (const auto& e : row.obc) csv.row(row.w, e.real(), e.imag(), row.edge_count());
    out.files.emplace_back(".csv", csv.str());

    json ets = json::array(), pbc = json::array();
    for (const auto& e : e_ts) ets.push_back(complex_json(e));
    for (const auto& [tp, tm] : table.pbc_closings) pbc.push_back({tp, tm});
    out.results["transition_energies"] = ets;
    out.results["critical_w"] = table.critical_w;
    out.results["phases_edge_pairs"] = table.phases;
    out.results["obc_onset_w"] = table.obc_onset;
    out.results["pbc_closing_w"] = pbc;
    out.results["pbc_gap_min_w"] = table.pbc_gap_min_w;
    bool differ = false;
    for (std::size_t t = 0; t < e_ts.size(); ++t) {
        const double wc = table.critical_w[t];
        differ = differ || std::abs(table.pbc_closings[t].first - wc) > 1e-6 || std::abs(table.pbc_closings[t].second - wc) > 1e-6;
    }
    out.results["obc_pbc_closings_differ"] = differ;
    return out;
}

// ---------------------------------------------------------------------------

struct RunOutcome {
    std::vector<std::string> files;
    json summary;
};

class ValidationFailure : public ConfigError {
public:
    explicit ValidationFailure(std::vector<std::string> v)
        : ConfigError("config has " + std::to_string(v.size()) + " violation(s)"), violations(std::move(v)) {}
    std::vector<std::string> violations;
};

inline RunOutcome run(const RunConfig& c) {
    auto violations = validate(c);
    if (!violations.empty()) throw ValidationFailure(violations);

    const auto start = std::chrono::steady_clock::now();
    const ModelSetup setup = stage("model construction", [&] { return make_setup(c); });

    TaskOutput task;
    if (c.task == "spectrum") task = task_spectrum(c, setup);
    else if (c.task == "kappa_map") task = task_kappa_map(c, setup);
    else if (c.task == "winding_sweep") task = task_winding_sweep(c, setup);
    else if (c.task == "edge_modes") task = task_edge_modes(c, setup);
    else if (c.task == "isr_check") task = task_isr_check(c, setup);
    else if (c.task == "phase_sweep") task = task_phase_sweep(c, setup);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    RunOutcome outcome;
    for (const auto& [suffix, content] : task.files) {
        const std::string path = c.output + suffix;
        write_atomic(path, content);
        outcome.files.push_back(path);
    }
    outcome.summary = {{"config", to_json(c)},
                       {"versions", versions_json()},
                       {"wall_time_s", elapsed},
                       {"results", task.results},
                       {"warnings", task.warnings},
                       {"files", outcome.files}};
    const std::string summary_path = c.output + ".summary.json";
    write_atomic(summary_path, outcome.summary.dump(2) + "\n");
    outcome.files.push_back(summary_path);
    return outcome;
}

} // namespace emergent::cli
