#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "runner.hpp"

using namespace polarpath::cli;
namespace fs = std::filesystem;

namespace {

fs::path tmp_root() {
    const char* env = std::getenv("POLARPATH_TEST_TMP");
    fs::path p = env ? fs::path(env) : fs::temp_directory_path() / "polarpath_cli_test";
    fs::create_directories(p);
    return p;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = tmp_root() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

struct Invocation {
    int code;
    std::string out, err;
};

Invocation cli(std::vector<std::string> args) {
    args.insert(args.begin(), "polarpath");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<fs::path> with_suffix(const fs::path& dir, const std::string& suffix) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

} // namespace

TEST_CASE("list-experiments") {
    const auto r = cli({"list-experiments"});
    CHECK(r.code == 0);
    for (const auto& id : experiment_ids()) CHECK(r.out.find(id) != std::string::npos);
    CHECK(experiment_ids().size() == 6);
}

TEST_CASE("identities run writes a clean table and a manifest") {
    const auto dir = fresh_dir("identities");
    const auto r = cli({"run", "identities", "--N-max", "10000", "--output-dir", dir.string()});
    REQUIRE(r.code == 0);
    const auto csvs = with_suffix(dir, ".csv");
    REQUIRE(csvs.size() == 1);
    CHECK(csvs[0].filename().string().rfind("identities_", 0) == 0);
    std::istringstream in(slurp(csvs[0]));
    std::string line;
    std::getline(in, line);
    CHECK(line.find("config_hash=") != std::string::npos);
    std::getline(in, line);
    CHECK(line == "N,sum_odd,n_squared,sum_odd_squares,closed_form,mismatch");
    int rows = 0, bad = 0;
    while (std::getline(in, line)) {
        ++rows;
        bad += line.back() != '0';
    }
    CHECK(rows == 10000);
    CHECK(bad == 0);

    const auto manifests = with_suffix(dir, ".manifest.json");
    REQUIRE(manifests.size() == 1);
    const auto m = read_json(manifests[0]);
    CHECK(m.at("software_version").get<std::string>() == "0.1.0");
    CHECK(m.at("config_hash").get<std::string>().size() == 16);
    CHECK(m.at("outputs").size() == 2);
    const auto j = read_json(with_suffix(dir, ".json")[0] == manifests[0] ? with_suffix(dir, ".json")[1] : with_suffix(dir, ".json")[0]);
    CHECK(j.at("mismatches").get<int>() == 0);
    CHECK(j.at("config_hash") == m.at("config_hash"));
}

TEST_CASE("effective_generator run reports the fitted order") {
    const auto dir = fresh_dir("generator");
    const auto r = cli({"run", "effective_generator", "--N", "16,32,64", "--output-dir", dir.string()});
    CHECK(r.code == 0);
    const auto csvs = with_suffix(dir, ".csv");
    REQUIRE(csvs.size() == 1);
    CHECK(slurp(csvs[0]).find("N,residual,order_estimate\n16,") != std::string::npos);
    for (const auto& p : with_suffix(dir, ".json")) {
        if (p.string().find("manifest") != std::string::npos) continue;
        const auto j = read_json(p);
        CHECK(j.at("fitted_order").get<double>() == doctest::Approx(2.0).epsilon(0.05));
        CHECK(j.at("reports").size() == 3);
    }
}

TEST_CASE("config validation exits with code 2 and names the field") {
    const auto dir = fresh_dir("bad");
    const fs::path cfg = dir / "bad.json";
    std::ofstream(cfg) << R"({"experiment": "kernel_convergence", "n_slices": -4})";
    auto r = cli({"run", "--config", cfg.string(), "--output-dir", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("n_slices") != std::string::npos);

    r = cli({"run", "kernel_convergence", "--N", "-4", "--output-dir", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("'N'") != std::string::npos);

    std::ofstream(cfg) << R"({"experiment": "identities", "colour": 3})";
    r = cli({"run", "--config", cfg.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("colour") != std::string::npos);

    r = cli({"run", "no_such_experiment"});
    CHECK(r.code == 2);
    r = cli({"run", "delta_limit", "--tau", "-1"});
    CHECK(r.code == 2);
    CHECK(r.err.find("tau") != std::string::npos);
    CHECK(fs::is_empty(dir / ".") == false);
}

TEST_CASE("numeric failures exit with code 3") {
    const auto dir = fresh_dir("numeric");
    // The residual window [1.5, 2.5] lies outside the grid, so the target vanishes.
    const auto r = cli({"run", "effective_generator", "--N", "4", "--extent", "1.2", "--output-dir", dir.string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("numeric error") != std::string::npos);
}

TEST_CASE("config file with flag overrides") {
    const auto dir = fresh_dir("precedence");
    const fs::path cfg = dir / "cfg.json";
    std::ofstream(cfg) << R"({"experiment": "delta_limit", "n_slices": 2, "eps_list": [0.01, 0.001]})";
    const auto r = cli({"run", "--config", cfg.string(), "--N", "3", "--output-dir", dir.string()});
    CHECK(r.code == 0);
    for (const auto& p : with_suffix(dir, ".json")) {
        if (p.string().find("cfg.json") != std::string::npos) continue;
        const auto j = read_json(p);
        CHECK(j.at("config").at("n_slices").get<int>() == 3);
        CHECK(j.at("config").at("eps_list").size() == 2);
    }
}

TEST_CASE("reruns are bit-identical") {
    const auto a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
    REQUIRE(cli({"run", "scaled_vs_unscaled", "--N", "2", "--n1", "10", "--n2", "12", "--threads", "1", "--output-dir", a.string()}).code == 0);
    REQUIRE(cli({"run", "scaled_vs_unscaled", "--N", "2", "--n1", "10", "--n2", "12", "--threads", "3", "--output-dir", b.string()}).code == 0);
    for (const std::string suffix : {".csv", "_scaled.bin", "_unscaled.bin"}) {
        const auto fa = with_suffix(a, suffix), fb = with_suffix(b, suffix);
        REQUIRE(fa.size() == 1);
        REQUIRE(fb.size() == 1);
        CHECK(slurp(fa[0]) == slurp(fb[0]));
    }
    auto ja = read_json(with_suffix(a, ".manifest.json")[0]), jb = read_json(with_suffix(b, ".manifest.json")[0]);
    CHECK(ja.at("config_hash") == jb.at("config_hash"));
}

TEST_CASE("compare") {
    const auto one = fresh_dir("cmp_one"), sq = fresh_dir("cmp_sqrt");
    REQUIRE(cli({"run", "scaled_vs_unscaled", "--alpha", "one", "--N", "2", "--tau", "0.2", "--n1", "10", "--n2", "12", "--output-dir", one.string()}).code == 0);
    REQUIRE(cli({"run", "scaled_vs_unscaled", "--alpha", "sqrt_g", "--N", "2", "--tau", "0.2", "--n1", "10", "--n2", "12", "--output-dir", sq.string()}).code == 0);
    const auto s1 = with_suffix(one, "_scaled.bin")[0], u1 = with_suffix(one, "_unscaled.bin")[0];
    const auto s2 = with_suffix(sq, "_scaled.bin")[0], u2 = with_suffix(sq, "_unscaled.bin")[0];

    auto r = cli({"compare", s1.string(), s1.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("overall: max_abs=0 ") != std::string::npos);

    r = cli({"compare", s1.string(), u1.string()});
    CHECK(r.code == 0);

    r = cli({"compare", s2.string(), u2.string()});
    CHECK(r.code == 1);

    // Different configs: refused without --force.
    r = cli({"compare", s1.string(), s2.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("--force") != std::string::npos);
    r = cli({"compare", s1.string(), s2.string(), "--force"});
    CHECK(r.code == 1);

    const auto csv = with_suffix(one, ".csv")[0];
    r = cli({"compare", csv.string(), csv.string()});
    CHECK(r.code == 0);
    CHECK(cli({"compare", csv.string(), s1.string()}).code == 2);

    const auto other = fresh_dir("cmp_identities");
    REQUIRE(cli({"run", "identities", "--N-max", "50", "--output-dir", other.string()}).code == 0);
    CHECK(cli({"compare", csv.string(), with_suffix(other, ".csv")[0].string(), "--force"}).code == 2);

    std::vector<fs::path> jsons;
    for (const auto& d : {one, sq})
        for (const auto& p : with_suffix(d, ".json"))
            if (p.string().find("manifest") == std::string::npos) jsons.push_back(p);
    REQUIRE(jsons.size() == 2);
    CHECK(cli({"compare", jsons[0].string(), jsons[0].string()}).code == 0);
    CHECK(cli({"compare", jsons[0].string(), jsons[1].string(), "--force"}).code == 2);  // alpha text differs
}
