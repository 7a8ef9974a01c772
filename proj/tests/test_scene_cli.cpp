// Scene parsing and end-to-end command-line runs: strict key rejection, letter
// round trips, report determinism across runs, and process exit codes.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "diffcoh/diffeo.hpp"
#include "diffcoh/errors.hpp"
#include "diffcoh/groupcoc.hpp"
#include "diffcoh/parallel.hpp"
#include "diffcoh/scene.hpp"
#include "diffcoh/torusfield.hpp"

namespace dc = diffcoh;
namespace fs = std::filesystem;
using Json = dc::Json;

namespace {

fs::path fresh_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() /
                 ("diffcoh_cli_" + tag + "_" + std::to_string(static_cast<long>(::getpid())));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Run the installed binary, swallow its stdio, return the process exit code.
int run_cli(const std::string& args) {
    const std::string cmd = std::string(DIFFCOH_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

// Drop lines mentioning the wall-time field so timing noise cannot differ.
std::string strip_wall(const std::string& text) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
        if (line.find("wall_ms") == std::string::npos) out << line << "\n";
    return out.str();
}

dc::FourierField cos_axis(int axis, double amp) {
    dc::FourierField f(2, dc::Rank::Scalar, 1);
    std::vector<int> k(2, 0);
    k[axis] = 1;
    f.at(0, k) = amp / 2;
    k[axis] = -1;
    f.at(0, k) = amp / 2;
    return f;
}

Json linear_letter(int a, int b, int c, int d) {
    Json rows = Json::array();
    rows.push_back(Json::array({a, b}));
    rows.push_back(Json::array({c, d}));
    Json l;
    l["linear"] = rows;
    return l;
}

Json delta_scene_frozen() {
    Json scene;
    scene["dim"] = 2;
    scene["seed"] = 7;
    scene["grid"] = {{"coarse", 16}, {"fine", 32}};
    scene["structure"] = "standard";
    scene["words"]["a"] = Json::array({linear_letter(2, 1, 1, 1)});
    scene["words"]["b"] = Json::array({linear_letter(1, 1, 1, 2)});
    scene["pair"] = Json::array({"a", "b"});
    return scene;
}

double wrap_gap(double a, double b) {
    double d = std::abs(a - b);
    d -= std::floor(d);
    return std::min(d, 1.0 - d);
}

}  // namespace

TEST_CASE("malformed scene text reports line and column") {
    try {
        dc::parse_scene_text("{\n  \"dim\": 2,\n}");
        FAIL("expected a parse diagnostic");
    } catch (const dc::domain_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line") != std::string::npos);
        CHECK(msg.find("column") != std::string::npos);
    }
}

TEST_CASE("unknown keys are rejected with their object path") {
    Json obj = dc::parse_scene_text(R"({"dim": 2, "bogus": 1})");
    try {
        dc::require_keys(obj, {"dim", "seed"}, "scene");
        FAIL("expected an unknown-key rejection");
    } catch (const dc::domain_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bogus") != std::string::npos);
        CHECK(msg.find("scene") != std::string::npos);
        CHECK(msg.find("seed") != std::string::npos);  // known keys are listed
    }
}

TEST_CASE("word JSON round trips through the parser") {
    dc::FourierField phi = dc::random_shear_profile(2, 0, 2, 0.3, 71);
    dc::FourierField F = cos_axis(0, 0.2);
    dc::FourierField G = cos_axis(1, 0.15);

    Json jword = Json::array();
    jword.push_back(linear_letter(1, 1, 0, 1));
    {
        Json inv;
        inv["inv"]["translate"] = Json::array({0.25, 0.5});
        jword.push_back(inv);
    }
    {
        Json sh;
        sh["shear"]["axis"] = 0;
        sh["shear"]["phi"] = dc::field_to_json(phi);
        jword.push_back(sh);
    }
    {
        Json hm;
        hm["ham"]["F"] = dc::field_to_json(F);
        hm["ham"]["G"] = dc::field_to_json(G);
        hm["ham"]["steps"] = 8;
        jword.push_back(hm);
    }

    dc::DiffeoWord parsed = dc::parse_word(jword, 2, "scene/words/w");

    Eigen::MatrixXi m(2, 2);
    m << 1, 1, 0, 1;
    dc::VecN v(2);
    v << 0.25, 0.5;
    std::vector<dc::Letter> letters;
    letters.push_back({dc::LinearTorus(m), 1});
    letters.push_back({dc::Translation{v}, -1});
    letters.push_back({dc::Shear(0, phi), 1});
    letters.push_back({dc::HamSplit(F, G, 8), 1});
    dc::DiffeoWord direct = dc::make_word(2, std::move(letters));

    REQUIRE(parsed.letters.size() == direct.letters.size());
    for (int s = 0; s < 6; ++s) {
        dc::VecN x(2);
        x << dc::uniform01(301, 2 * s), dc::uniform01(301, 2 * s + 1);
        dc::VecN a = dc::apply(parsed, x);
        dc::VecN b = dc::apply(direct, x);
        CHECK(wrap_gap(a(0), b(0)) < 1e-13);
        CHECK(wrap_gap(a(1), b(1)) < 1e-13);
    }
}

TEST_CASE("malformed letters are rejected") {
    CHECK_THROWS_AS(dc::parse_word(dc::parse_scene_text(R"([{"fly": [1, 2]}])"), 2, "w"),
                    dc::domain_error);
    // two kinds in one letter object
    CHECK_THROWS_AS(
        dc::parse_word(
            dc::parse_scene_text(R"([{"linear": [[1,0],[0,1]], "translate": [0,0]}])"), 2, "w"),
        dc::domain_error);
    // wrong matrix shape
    CHECK_THROWS_AS(dc::parse_word(dc::parse_scene_text(R"([{"linear": [[1,0]]}])"), 2, "w"),
                    dc::domain_error);
    // a word is an array, not an object
    CHECK_THROWS_AS(dc::parse_word(dc::parse_scene_text(R"({"linear": [[1,0],[0,1]]})"), 2, "w"),
                    dc::domain_error);
    // determinant is validated by the primitive itself
    CHECK_THROWS_AS(dc::parse_word(dc::parse_scene_text(R"([{"linear": [[2,0],[0,1]]}])"), 2, "w"),
                    dc::domain_error);
}

TEST_CASE("structure shorthand and strict kinds") {
    dc::StructureField std2 = dc::parse_structure(dc::parse_scene_text(R"("standard")"), 2, "s");
    CHECK(std2.kind() == dc::StructureField::Kind::Complex);
    CHECK(std2.dim() == 2);

    dc::StructureField met =
        dc::parse_structure(dc::parse_scene_text(R"({"kind": "metric", "field": "standard"})"), 2,
                            "s");
    CHECK(met.kind() == dc::StructureField::Kind::Metric);

    // odd dimension has no standard complex structure
    CHECK_THROWS_AS(dc::parse_structure(dc::parse_scene_text(R"("standard")"), 3, "s"),
                    dc::domain_error);
    CHECK_THROWS_AS(
        dc::parse_structure(dc::parse_scene_text(R"({"kind": "weird", "field": "standard"})"), 2,
                            "s"),
        dc::domain_error);
    CHECK_THROWS_AS(
        dc::parse_structure(dc::parse_scene_text(R"({"kind": "metric"})"), 2, "s"),
        dc::domain_error);
}

TEST_CASE("chain JSON parses terms and the optional note") {
    Json j = dc::parse_scene_text(
        R"({"terms": [{"a": 1.0, "h": "f", "k": "gF"}, {"a": -2.0, "h": "g", "k": "f"}],
            "note": "truncated tail"})");
    dc::L1Chain chain = dc::parse_chain(j, "scene/chain");
    REQUIRE(chain.terms.size() == 2);
    CHECK(chain.terms[0].a == 1.0);
    CHECK(chain.terms[0].h == "f");
    CHECK(chain.terms[0].k == "gF");
    CHECK(chain.terms[1].a == -2.0);
    CHECK(chain.truncation_note == "truncated tail");

    CHECK_THROWS_AS(dc::parse_chain(dc::parse_scene_text(R"({"terms": [{"h": "f", "k": "g"}]})"),
                                    "c"),
                    dc::domain_error);
    CHECK_THROWS_AS(
        dc::parse_chain(dc::parse_scene_text(R"({"terms": [], "extra": 1})"), "c"),
        dc::domain_error);
}

TEST_CASE("field JSON embedded in a scene survives a round trip") {
    dc::FourierField f = dc::random_scalar_field(2, 2, 0.5, 31);
    Json j = dc::field_to_json(f);
    dc::FourierField back = dc::parse_field(j, "t");
    CHECK(back == f);

    Json bad = j;
    bad["surprise"] = 1;
    CHECK_THROWS_AS(dc::parse_field(bad, "t"), dc::domain_error);
}

TEST_CASE("cli selftest passes") {
    fs::path dir = fresh_dir("selftest");
    CHECK(run_cli("selftest --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "report.json"));
}

TEST_CASE("cli delta run writes a frozen-value report and convergence table") {
    fs::path dir = fresh_dir("delta");
    const fs::path scene = dir / "scene.json";
    write_text(scene, delta_scene_frozen().dump(2));

    REQUIRE(run_cli("delta --scene " + scene.string() + " --out " + dir.string()) == 0);

    Json rep = dc::load_scene_file((dir / "report.json").string());
    CHECK(rep["schema"].get<int>() == 1);
    CHECK(rep["subcommand"].get<std::string>() == "delta");
    CHECK(rep["seed"].get<std::uint64_t>() == 7);
    CHECK(!rep["convention_tag"].get<std::string>().empty());
    CHECK(rep.contains("wall_ms"));
    // linear words have constant fibers, so the two grids agree to roundoff
    CHECK(std::abs(rep["value"].get<double>() - (-0.643501108793283)) < 1e-9);
    CHECK(rep["error_estimate"].get<double>() < 1e-8);

    const std::string csv = read_text(dir / "convergence.csv");
    CHECK(csv.find("quantity,grid,value") != std::string::npos);
    CHECK(csv.find("delta2,16x16,") != std::string::npos);
    CHECK(csv.find("delta2,32x32,") != std::string::npos);
}

TEST_CASE("cli reports are deterministic across runs") {
    fs::path dir1 = fresh_dir("det1");
    fs::path dir2 = fresh_dir("det2");
    const fs::path scene = dir1 / "scene.json";
    write_text(scene, delta_scene_frozen().dump(2));

    REQUIRE(run_cli("delta --scene " + scene.string() + " --out " + dir1.string()) == 0);
    REQUIRE(run_cli("delta --scene " + scene.string() + " --out " + dir2.string()) == 0);

    CHECK(strip_wall(read_text(dir1 / "report.json")) ==
          strip_wall(read_text(dir2 / "report.json")));
    CHECK(read_text(dir1 / "convergence.csv") == read_text(dir2 / "convergence.csv"));
}

TEST_CASE("cli missing scene exits with the usage code") {
    fs::path dir = fresh_dir("noscene");
    CHECK(run_cli("delta --out " + dir.string()) == 2);
}

TEST_CASE("cli unknown scene key exits with the usage code and records the error") {
    fs::path dir = fresh_dir("badkey");
    Json scene = delta_scene_frozen();
    scene["bogus"] = true;
    const fs::path file = dir / "scene.json";
    write_text(file, scene.dump(2));

    CHECK(run_cli("delta --scene " + file.string() + " --out " + dir.string()) == 2);
    Json rep = dc::load_scene_file((dir / "report.json").string());
    REQUIRE(rep.contains("error"));
    CHECK(rep["error"].get<std::string>().find("bogus") != std::string::npos);
}

TEST_CASE("cli certify on a zero chain exits with the inconclusive code") {
    fs::path dir = fresh_dir("zerochain");
    Json scene;
    scene["dim"] = 2;
    scene["grid"] = {{"coarse", 8}, {"fine", 16}};
    scene["f"] = Json::array({linear_letter(1, 1, 0, 1)});
    scene["g"] = Json::array({linear_letter(1, 0, 1, 1)});
    scene["chain"] = {{"terms", Json::array()}};
    const fs::path file = dir / "scene.json";
    write_text(file, scene.dump(2));

    CHECK(run_cli("certify --scene " + file.string() + " --out " + dir.string()) == 4);
    Json rep = dc::load_scene_file((dir / "report.json").string());
    CHECK(rep["verdict"].get<std::string>() == "inconclusive");
    CHECK(rep["value"].get<double>() == 0.0);
    CHECK(rep["cycle_check"]["is_cycle"].get<bool>());
}

TEST_CASE("cli curvature-identity scene runs end to end") {
    fs::path dir = fresh_dir("id54");
    REQUIRE(fs::exists(DIFFCOH_SCENE_DIR "/identity54_cosx.json"));
    REQUIRE(run_cli(std::string("identity54 --scene ") + DIFFCOH_SCENE_DIR
                    "/identity54_cosx.json --grid 32,64 --out " + dir.string()) == 0);
    Json rep = dc::load_scene_file((dir / "report.json").string());
    CHECK(rep.contains("lhs"));
    CHECK(rep.contains("rhs"));
    CHECK(std::abs(rep["lhs"].get<double>()) > 1e-6);

    const std::string csv = read_text(dir / "convergence.csv");
    CHECK(csv.find("lhs,32x32,") != std::string::npos);
    CHECK(csv.find("rhs,64x64,") != std::string::npos);
}

TEST_CASE("cli json-only suppresses the convergence table") {
    fs::path dir = fresh_dir("jsononly");
    const fs::path scene = dir / "scene.json";
    write_text(scene, delta_scene_frozen().dump(2));
    REQUIRE(run_cli("delta --scene " + scene.string() + " --out " + dir.string() +
                    " --json-only") == 0);
    CHECK(fs::exists(dir / "report.json"));
    CHECK(!fs::exists(dir / "convergence.csv"));
}
