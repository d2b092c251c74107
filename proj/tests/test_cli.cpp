#include <emergent/runner.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace emergent;
using namespace emergent::cli;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("emergent_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

RunConfig fig2c_spectrum(const fs::path& dir) {
    RunConfig c;
    c.model = "hatano_nelson";
    c.params = {{"eps_a", 0.0}, {"eps_b", 0.4}, {"t1", 0.4}, {"t2", 0.2}, {"t3", 0.1}};
    c.n_cells = 40;
    c.boundary = "both";
    c.task = "spectrum";
    c.output = (dir / "fig2c").string();
    return c;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

} // namespace

TEST(Config, RoundTrip) {
    RunConfig c = fig2c_spectrum("/tmp");
    c.grid = GridSettings{-1.0, 1.0, -0.5, 0.5, 20, 30};
    c.sweep = SweepSettings{0.5, 2.5, 11};
    c.contours = true;
    c.n_k = 256;
    EXPECT_EQ(from_json(to_json(c)), c);
    EXPECT_EQ(parse_config(to_json(c).dump()), c);
}

TEST(Config, RejectsUnknownKeysAndBadJson) {
    auto j = to_json(fig2c_spectrum("/tmp"));
    j["bogus"] = 1;
    EXPECT_THROW(from_json(j), ConfigError);
    EXPECT_THROW(parse_config("{ not json"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Validate, ReportsEachViolation) {
    RunConfig c = fig2c_spectrum("/tmp");
    EXPECT_TRUE(validate(c).empty());

    c.n_cells = 1;
    EXPECT_TRUE(contains(validate(c), "n_cells: n_cells >= 2 required"));

    RunConfig ssh;
    ssh.model = "nh_ssh";
    ssh.params = {{"eps_a", 0.9}, {"eps_b", 0.4}, {"t1", 1.0}, {"t2", 0.5}, {"t3", 0.6}};
    ssh.task = "edge_modes";
    ssh.output = "/tmp/x";
    auto v = validate(ssh);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_NE(v[0].find("w"), std::string::npos);

    RunConfig km = fig2c_spectrum("/tmp");
    km.task = "kappa_map";
    km.boundary = "pbc";
    km.contours = true;
    km.params["t2"] = 0.0;
    v = validate(km);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_NE(v[0].find("t2"), std::string::npos);

    RunConfig bad = fig2c_spectrum("/tmp");
    bad.model = "nope";
    bad.task = "dance";
    EXPECT_GE(validate(bad).size(), 2u);
}

TEST(Output, FormatDouble) {
    EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
    EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Output, CsvTable) {
    CsvTable t({"a", "b", "c"});
    t.row(1.5, std::string("x"), std::size_t{3});
    EXPECT_EQ(t.str(), "a,b,c\n1.5,x,3\n");
    EXPECT_EQ(t.rows(), 2u);
    EXPECT_THROW(t.row(1.0), std::logic_error);
}

TEST(Output, WriteAtomic) {
    auto dir = temp_dir("atomic");
    const fs::path p = dir / "sub" / "file.txt";
    write_atomic(p, "first");
    write_atomic(p, "second");
    EXPECT_EQ(slurp(p), "second");
    EXPECT_FALSE(fs::exists(dir / "sub" / "file.txt.tmp"));
}

TEST(Run, ThreeSiteIsrCheck) {
    auto dir = temp_dir("three_site");
    RunConfig c;
    c.model = "three_site";
    c.params = {{"phi", std::numbers::pi / 2}, {"alpha", 1.0}};
    c.n_cells = 2;
    c.task = "isr_check";
    c.output = (dir / "ts").string();
    auto outcome = run(c);
    EXPECT_LT(outcome.summary["results"]["spectrum_preservation_residual"].get<double>(), 1e-9);
    auto summary = json::parse(slurp(dir / "ts.summary.json"));
    EXPECT_EQ(summary["config"], to_json(c));
    for (const char* key : {"versions", "wall_time_s", "results", "warnings", "files"}) EXPECT_TRUE(summary.contains(key)) << key;
    auto rows = read_csv(dir / "ts.csv");
    EXPECT_EQ(rows.at(0), (std::vector<std::string>{"check", "value"}));
}

TEST(Run, Fig2cSpectrumSchemaAndDeterminism) {
    auto dir = temp_dir("fig2c");
    RunConfig c = fig2c_spectrum(dir);
    run(c);
    const std::string first = slurp(dir / "fig2c.csv");
    run(c);
    EXPECT_EQ(slurp(dir / "fig2c.csv"), first);

    auto rows = read_csv(dir / "fig2c.csv");
    ASSERT_EQ(rows.at(0), (std::vector<std::string>{"E_re", "E_im", "boundary", "label", "kappa"}));
    std::size_t obc = 0, pbc = 0, left = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        ASSERT_EQ(rows[i].size(), 5u);
        if (rows[i][2] == "obc") {
            ++obc;
            EXPECT_LT(std::stod(rows[i][4]), 0.0);
            if (rows[i][3] == "left") ++left;
        } else {
            ++pbc;
        }
    }
    EXPECT_EQ(obc, 120u);
    EXPECT_EQ(pbc, 120u);
    EXPECT_GE(left, 110u);
}

TEST(Run, WindingSweepStaircase) {
    auto dir = temp_dir("sweep");
    RunConfig c;
    c.model = "nh_ssh";
    c.params = {{"eps_a", 0.9}, {"eps_b", 0.4}, {"t1", 1.0}, {"t2", 0.5}, {"t3", 0.6}, {"w", 3.0}};
    c.n_cells = 35;
    c.task = "winding_sweep";
    c.sweep = SweepSettings{0.0, 4.0, 81};
    c.n_k = 256;
    c.output = (dir / "ws").string();
    run(c);
    auto rows = read_csv(dir / "ws.csv");
    ASSERT_EQ(rows.at(0), (std::vector<std::string>{"w", "E_t_index", "winding", "w_c"}));
    ASSERT_EQ(rows.size(), 1u + 81u * 3u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double w = std::stod(rows[i][0]), wc = std::stod(rows[i][3]);
        if (std::abs(w - wc) < 0.05) continue;
        EXPECT_NEAR(std::stod(rows[i][2]), w > wc ? 1.0 : 0.0, 1e-3) << "w = " << w;
    }
}

TEST(Run, ValidationFailureCarriesViolations) {
    RunConfig c = fig2c_spectrum("/tmp");
    c.n_cells = 0;
    try {
        run(c);
        FAIL() << "expected ValidationFailure";
    } catch (const ValidationFailure& e) {
        EXPECT_FALSE(e.violations.empty());
    }
}

TEST(ShippedConfigs, AllValidate) {
    const fs::path dir = fs::path(EMERGENT_SOURCE_DIR) / "configs" / "figures";
    std::size_t n = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".json") continue;
        ++n;
        RunConfig c = load_config(entry.path().string());
        EXPECT_TRUE(validate(c).empty()) << entry.path();
    }
    EXPECT_EQ(n, 16u);
}
