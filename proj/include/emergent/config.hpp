#pragma once

#include "models.hpp"
#include "nhse.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace emergent::cli {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SweepSettings {
    double w_min = 0.0;
    double w_max = 4.0;
    std::size_t n_w = 81;
    bool operator==(const SweepSettings&) const = default;
};

struct GridSettings {
    double re_min = 0.0, re_max = 0.0, im_min = 0.0, im_max = 0.0;
    std::size_t n_re = 400, n_im = 400;
    bool operator==(const GridSettings&) const = default;
};

struct RunConfig {
    std::string model;
    std::map<std::string, double> params;
    std::size_t n_cells = 40;
    /// "obc", "pbc" or "both".
    std::string boundary = "obc";
    std::string task;
    std::string output;
    /// principle_b only: catalog graph name and chaining mode ("hn" or "ssh").
    std::optional<std::string> graph;
    std::optional<std::string> mode;
    /// Explicit kappa_map window; absent means the padded PBC bounding box.
    std::optional<GridSettings> grid;
    /// kappa_map only: also emit the analytic kappa = 0 contours.
    bool contours = false;
    std::optional<SweepSettings> sweep;
    std::size_t n_k = 1024;
    std::size_t threads = 0;

    bool operator==(const RunConfig&) const = default;

    double param(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
    double param(const std::string& key) const {
        auto it = params.find(key);
        if (it == params.end()) throw ConfigError("missing parameter '" + key + "'");
        return it->second;
    }
};

struct ModelInfo {
    std::string name;
    std::vector<std::string> required;
    std::vector<std::string> optional;
    std::vector<std::string> tasks;
    std::string description;
};

inline const std::vector<std::string>& known_tasks() {
    static const std::vector<std::string> tasks{"spectrum", "kappa_map", "winding_sweep", "edge_modes", "isr_check", "phase_sweep"};
    return tasks;
}

inline const std::vector<ModelInfo>& model_catalog() {
    static const std::vector<ModelInfo> catalog{
        {"three_site", {"phi", "alpha"}, {}, {"spectrum", "kappa_map", "isr_check"},
         "three sites with complex hopping e^{i phi} and loss i alpha; reduces to a two-site non-reciprocal dimer"},
        {"hatano_nelson", {"eps_a", "eps_b", "t1", "t2", "t3"}, {}, {"spectrum", "kappa_map", "isr_check"},
         "three-band lattice whose reduction onto the red sites is an energy-dependent Hatano-Nelson chain"},
        {"nh_ssh", {"eps_a", "eps_b", "t1", "t2", "t3", "w"}, {}, known_tasks(),
         "four-band depleted Creutz ladder whose reduction is an energy-dependent non-Hermitian SSH chain"},
        {"principle_a", {"phi", "alpha"}, {"network_size", "network_coupling", "direct_hop"}, {"spectrum", "kappa_map", "isr_check"},
         "construction principle A: red site, site c and a path network C per cell"},
        {"principle_b", {"eps", "t1", "t2", "t3"}, {"w", "red_gain", "direct_hop"}, known_tasks(),
         "construction principle B on a latently symmetric graph G (keys graph, mode)"},
    };
    return catalog;
}

inline const ModelInfo* find_model(const std::string& name) {
    for (const auto& m : model_catalog())
        if (m.name == name) return &m;
    return nullptr;
}

// ---------------------------------------------------------------------------
// JSON mapping

inline json to_json(const RunConfig& c) {
    json j;
    j["model"] = c.model;
    j["params"] = json::object();
    for (const auto& [k, v] : c.params) j["params"][k] = v;
    j["n_cells"] = c.n_cells;
    j["boundary"] = c.boundary;
    j["task"] = c.task;
    j["output"] = c.output;
    if (c.graph) j["graph"] = *c.graph;
    if (c.mode) j["mode"] = *c.mode;
    if (c.grid)
        j["grid"] = {{"re_min", c.grid->re_min}, {"re_max", c.grid->re_max}, {"im_min", c.grid->im_min},
                     {"im_max", c.grid->im_max}, {"n_re", c.grid->n_re},     {"n_im", c.grid->n_im}};
    j["contours"] = c.contours;
    if (c.sweep) j["sweep"] = {{"w_min", c.sweep->w_min}, {"w_max", c.sweep->w_max}, {"n_w", c.sweep->n_w}};
    j["n_k"] = c.n_k;
    j["threads"] = c.threads;
    return j;
}

namespace detail {

inline double get_number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + key + ": required");
    if (!j.at(key).is_number()) throw ConfigError(where + key + ": expected a number");
    return j.at(key).get<double>();
}

inline std::size_t get_count(const json& j, const std::string& key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError(where + key + ": expected an integer");
    const auto x = v.get<long long>();
    if (x < 0) throw ConfigError(where + key + ": expected a non-negative integer");
    return static_cast<std::size_t>(x);
}

inline std::string get_string(const json& j, const std::string& key) {
    if (!j.at(key).is_string()) throw ConfigError(key + ": expected a string");
    return j.at(key).get<std::string>();
}

} // namespace detail

/// Structural parse; semantic checks live in validate().
inline RunConfig from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    static const std::set<std::string> allowed{"model", "params", "n_cells", "boundary", "task", "output", "graph", "mode",
                                               "grid",  "contours", "sweep", "n_k", "threads"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError(it.key() + ": unknown key");

    RunConfig c;
    if (j.contains("model")) c.model = detail::get_string(j, "model");
    if (j.contains("task")) c.task = detail::get_string(j, "task");
    if (j.contains("output")) c.output = detail::get_string(j, "output");
    if (j.contains("boundary")) c.boundary = detail::get_string(j, "boundary");
    if (j.contains("graph")) c.graph = detail::get_string(j, "graph");
    if (j.contains("mode")) c.mode = detail::get_string(j, "mode");
    if (j.contains("n_cells")) c.n_cells = detail::get_count(j, "n_cells", "");
    if (j.contains("n_k")) c.n_k = detail::get_count(j, "n_k", "");
    if (j.contains("threads")) c.threads = detail::get_count(j, "threads", "");
    if (j.contains("contours")) {
        if (!j["contours"].is_boolean()) throw ConfigError("contours: expected true or false");
        c.contours = j["contours"].get<bool>();
    }
    if (j.contains("params")) {
        const auto& p = j["params"];
        if (!p.is_object()) throw ConfigError("params: expected an object of numbers");
        for (auto it = p.begin(); it != p.end(); ++it) {
            if (!it.value().is_number()) throw ConfigError("params." + it.key() + ": expected a number");
            c.params[it.key()] = it.value().get<double>();
        }
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        if (!g.is_object()) throw ConfigError("grid: expected an object");
        GridSettings gs;
        gs.re_min = detail::get_number(g, "re_min", "grid.");
        gs.re_max = detail::get_number(g, "re_max", "grid.");
        gs.im_min = detail::get_number(g, "im_min", "grid.");
        gs.im_max = detail::get_number(g, "im_max", "grid.");
        if (g.contains("n_re")) gs.n_re = detail::get_count(g, "n_re", "grid.");
        if (g.contains("n_im")) gs.n_im = detail::get_count(g, "n_im", "grid.");
        c.grid = gs;
    }
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        if (!s.is_object()) throw ConfigError("sweep: expected an object");
        SweepSettings ss;
        if (s.contains("w_min")) ss.w_min = detail::get_number(s, "w_min", "sweep.");
        if (s.contains("w_max")) ss.w_max = detail::get_number(s, "w_max", "sweep.");
        if (s.contains("n_w")) ss.n_w = detail::get_count(s, "n_w", "sweep.");
        c.sweep = ss;
    }
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Violations that would stop run() from starting; empty when the config is runnable.
inline std::vector<std::string> validate(const RunConfig& c) {
    std::vector<std::string> v;
    const ModelInfo* info = find_model(c.model);
    if (c.model.empty()) v.push_back("model: required");
    else if (!info) v.push_back("model: unknown model '" + c.model + "'");

    const auto& tasks = known_tasks();
    if (c.task.empty()) v.push_back("task: required");
    else if (std::find(tasks.begin(), tasks.end(), c.task) == tasks.end()) v.push_back("task: unknown task '" + c.task + "'");
    else if (info && std::find(info->tasks.begin(), info->tasks.end(), c.task) == info->tasks.end())
        v.push_back("task: '" + c.task + "' is not available for model '" + c.model + "'");

    if (c.output.empty()) v.push_back("output: required (path prefix for the CSV and JSON files)");
    if (c.n_cells < 2) v.push_back("n_cells: n_cells >= 2 required");
    if (c.boundary != "obc" && c.boundary != "pbc" && c.boundary != "both") v.push_back("boundary: must be obc, pbc or both");
    if (c.n_k < 64) v.push_back("n_k: n_k >= 64 required");

    for (const auto& [k, x] : c.params)
        if (!std::isfinite(x)) v.push_back(k + ": must be finite");

    if (info) {
        for (const auto& key : info->required)
            if (!c.params.count(key)) v.push_back(key + ": required parameter for model '" + c.model + "'");
        for (const auto& [k, x] : c.params) {
            const bool known = std::find(info->required.begin(), info->required.end(), k) != info->required.end() ||
                               std::find(info->optional.begin(), info->optional.end(), k) != info->optional.end();
            if (!known) v.push_back(k + ": not a parameter of model '" + c.model + "'");
        }
    }

    if (c.model == "principle_b") {
        const std::string mode = c.mode.value_or("ssh");
        if (mode != "hn" && mode != "ssh") v.push_back("mode: must be hn or ssh");
        if (c.graph) {
            bool found = false;
            for (const auto& g : models::latent_graph_catalog()) found = found || g.name == *c.graph;
            if (!found) v.push_back("graph: unknown graph '" + *c.graph + "'");
        }
        if (mode == "ssh" && !c.params.count("w")) v.push_back("w: required for principle_b in ssh mode");
        if (mode == "hn" && (c.task == "winding_sweep" || c.task == "edge_modes" || c.task == "phase_sweep"))
            v.push_back("mode: task '" + c.task + "' needs the ssh mode");
    } else {
        if (c.graph) v.push_back("graph: only used by principle_b");
        if (c.mode) v.push_back("mode: only used by principle_b");
    }
    if (c.model == "principle_a" && c.params.count("network_size")) {
        const double n = c.params.at("network_size");
        if (n < 0 || n != std::floor(n)) v.push_back("network_size: must be a non-negative integer");
    }

    if (c.task == "kappa_map") {
        if (c.grid) {
            if (!(c.grid->re_max > c.grid->re_min)) v.push_back("grid.re_max: must exceed grid.re_min");
            if (!(c.grid->im_max > c.grid->im_min)) v.push_back("grid.im_max: must exceed grid.im_min");
            if (c.grid->n_re < 2 || c.grid->n_im < 2) v.push_back("grid.n_re, grid.n_im: at least 2 points each");
        }
        if (c.contours) {
            if (c.model != "hatano_nelson" && c.model != "nh_ssh")
                v.push_back("contours: analytic kappa = 0 contours exist only for hatano_nelson and nh_ssh");
            else if (c.params.count("t2") && std::abs(c.params.at("t2")) < 1e-12)
                v.push_back("t2: the analytic kappa = 0 contours require t2 != 0");
        }
    } else if (c.contours) {
        v.push_back("contours: only used by task kappa_map");
    }

    if (c.task == "winding_sweep" || c.task == "phase_sweep") {
        if (!c.sweep) v.push_back("sweep: required for task '" + c.task + "'");
        else {
            if (c.sweep->n_w < 2) v.push_back("sweep.n_w: n_w >= 2 required");
            if (!(c.sweep->w_max > c.sweep->w_min)) v.push_back("sweep.w_max: must exceed sweep.w_min");
        }
    }
    return v;
}

} // namespace emergent::cli
