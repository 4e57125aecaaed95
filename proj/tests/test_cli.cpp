#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "kam/cli.hpp"
#include "kam/weierstrass.hpp"

using namespace kam;
using namespace kam::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("kamtool_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "kamtool");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return main_entry(static_cast<int>(argv.size()), argv.data());
}

int line_count(const std::string& s)
{
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

const char* kRational = R"(
name: rational
n: 2
xi0: [1, 2]
delta: 0.1
epsilon: 1.0e-6
gamma: 0.1
perturbation:
  terms:
    - {type: cos, k: [1, 0], l: [0, 0], amplitude: 1}
)";

}  // namespace

TEST_CASE("parse_config: full document")
{
    const char* doc = R"(
name: quad
n: 2
xi0: [0.4, 0.7]
delta: 0.05
epsilon: 1.0e-7
tau: 1.5
gamma: auto
seed: 9
frequency: {map: quadratic, coefficient: 0.2}
perturbation:
  terms:
    - {type: sin, k: [1, -1], l: [1, 0], amplitude: 0.5}
    - type: cos
      k: [0, 0]
      l: [0, 1]
      amplitude: {kind: linear, index: 1, scale: 2, offset: 0.1}
schedule: {steps: 3, kmax: 6, eta: auto}
tolerances: {translation: 1.0e-13}
)";
    const ProblemConfig c = parse_config(doc);
    CHECK(c.name == "quad");
    CHECK(c.xi0 == std::vector<double>{0.4, 0.7});
    CHECK(c.delta == 0.05);
    CHECK(c.tau == 1.5);
    CHECK_FALSE(c.gamma.has_value());
    CHECK(c.seed == 9);
    CHECK(c.map == "quadratic");
    CHECK(c.map_coefficient == 0.2);
    REQUIRE(c.terms.size() == 2);
    CHECK(c.terms[0].type == "sin");
    CHECK(c.terms[0].amplitude.value == 0.5);
    CHECK(c.terms[1].amplitude.kind == AmplitudeSpec::Kind::Linear);
    CHECK(c.terms[1].amplitude.scale == 2.0);
    CHECK(c.steps == 3);
    CHECK(c.kmax == 6);
    CHECK(c.eta == 0);
    CHECK(c.translation_tol == 1e-13);

    const Problem p = build_problem(c);
    Vector xi(2);
    xi << 0.4, 0.7;
    const Series P = p.perturbation(xi);
    Vector y(2), x(2);
    y << 0.3, -0.2;
    x << 0.9, 0.1;
    const double want = 0.5 * 0.3 * std::sin(0.8) + (2 * 0.7 + 0.1) * (-0.2);
    CHECK(evaluate_real(P, y, x) == doctest::Approx(want).epsilon(1e-14));
    CHECK(p.freq(xi)[0] == doctest::Approx(0.4 + 0.2 * 0.16));
}

TEST_CASE("parse_config: field-level errors are collected")
{
    const char* doc = R"(
n: 2
xi0: [1]
delta: -1
epsilon: abc
frequency: {map: foo}
perturbation:
  terms:
    - {type: tan, k: [1], l: [0, 0]}
)";
    try {
        parse_config(doc);
        FAIL("accepted");
    } catch (const ConfigError& e) {
        const auto& errs = e.errors();
        auto has = [&](const std::string& key) {
            for (const auto& s : errs)
                if (s.rfind(key, 0) == 0) return true;
            return false;
        };
        CHECK(has("xi0"));
        CHECK(has("delta"));
        CHECK(has("epsilon"));
        CHECK(has("frequency.map"));
        CHECK(has("perturbation.terms[0].type"));
        CHECK(has("perturbation.terms[0].k"));
        CHECK(errs.size() >= 6);
    }
    CHECK_THROWS_AS(parse_config("[1, 2"), ConfigError);
    CHECK_THROWS_AS(parse_config("- a\n- b\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), ConfigError);
}

TEST_CASE("builtins expand and round-trip through YAML")
{
    for (const char* name : {"smooth-benchmark", "example-7.2"}) {
        const ProblemConfig c = builtin_config(name);
        CHECK(validate(c).empty());
        const std::string text = emit_config(c);
        const ProblemConfig back = parse_config(text);
        CHECK(emit_config(back) == text);
    }
    CHECK(builtin_config("example-7.2").notes.find("floating-point") != std::string::npos);
    CHECK(parse_config("builtin: smooth-benchmark\nepsilon: 1.0e-7\n").epsilon == 1e-7);
    CHECK_THROWS_AS(builtin_config("nope"), ConfigError);
}

TEST_CASE("exit code mapping")
{
    CHECK(exit_code(Cause::None) == 0);
    CHECK(exit_code(Cause::Certification) == 3);
    CHECK(exit_code(Cause::NonContraction) == 4);
    CHECK(exit_code(Cause::TranslationFailure) == 5);
    CHECK(exit_code(Cause::BoundaryApproach) == 5);
}

TEST_CASE("run: smooth benchmark writes the trace files")
{
    const fs::path out = scratch("bench");
    CHECK(invoke({"run", "--config", "smooth-benchmark", "--out", out.string()}) == 0);
    for (const char* f : {"config.resolved.yaml", "trace.jsonl", "summary.json", "trace.csv"})
        CHECK(fs::exists(out / f));
    const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
    CHECK(summary["freq_residual"].get<double>() <= 1e-10);
    CHECK(summary["steps_completed"] == 5);
    CHECK(summary["torus"]["within_budget"] == true);
    CHECK(line_count(slurp(out / "trace.jsonl")) == 6);
    const auto header = nlohmann::json::parse(slurp(out / "trace.jsonl").substr(0, slurp(out / "trace.jsonl").find('\n')));
    CHECK(header.contains("schedule"));
    const std::string csv = slurp(out / "trace.csv");
    CHECK(csv.rfind("nu,P_norm,xi_increment,freq_residual\n", 0) == 0);
    CHECK(line_count(csv) == 7);

    // identical config and seed give byte-identical files
    const fs::path again = scratch("bench2");
    CHECK(invoke({"run", "--config", "smooth-benchmark", "--out", again.string()}) == 0);
    for (const char* f : {"config.resolved.yaml", "trace.jsonl", "summary.json", "trace.csv"})
        CHECK(slurp(out / f) == slurp(again / f));
}

TEST_CASE("run: failure exit codes")
{
    const fs::path dir = scratch("fail");
    std::ofstream(dir / "rational.yaml") << kRational;
    CHECK(invoke({"run", "--config", (dir / "rational.yaml").string(), "--out", (dir / "r").string()}) == 3);
    const auto summary = nlohmann::json::parse(slurp(dir / "r" / "summary.json"));
    CHECK(summary["witness_k"] == nlohmann::json({2, -1}));

    CHECK(invoke({"run", "--eps", "0.5", "--out", (dir / "e").string()}) == 4);

    std::ofstream(dir / "bad.yaml") << "n: 2\nxi0: [1]\n";
    CHECK(invoke({"run", "--config", (dir / "bad.yaml").string(), "--out", (dir / "b").string()}) == 2);
    CHECK(invoke({"run", "--gamma", "wide", "--out", (dir / "g").string()}) == 2);
    CHECK(invoke({"run", "--steps", "many"}) == 2);
    CHECK(invoke({}) == 2);
}

TEST_CASE("run: overrides reach the resolved config")
{
    const fs::path out = scratch("over");
    CHECK(invoke({"run", "--steps", "2", "--kmax", "6", "--seed", "4", "--gamma", "0.2", "--out", out.string()}) == 0);
    const ProblemConfig c = parse_config(slurp(out / "config.resolved.yaml"));
    CHECK(c.steps == 2);
    CHECK(c.kmax == 6);
    CHECK(c.seed == 4);
    REQUIRE(c.gamma.has_value());
    CHECK(*c.gamma == 0.2);
}

TEST_CASE("example-7.2: the first step shifts xi by the linear drift")
{
    const ProblemConfig c = builtin_config("example-7.2");
    const Problem p = build_problem(c);
    CHECK_FALSE(p.freq.smooth);
    const auto t = run(p, run_options(c));
    REQUIRE(t.success());
    REQUIRE(t.steps.size() == 3);
    // omega = id and eps P = eps xi_i y_i near xi0: xi_1 = xi0 / (1 + eps)
    const Vector want = t.xi0 / (1.0 + c.epsilon);
    CHECK((t.steps[0].xi_next - want).norm() <= 1e-13);
    for (const auto& r : t.steps) CHECK((r.xi_next - t.xi0).norm() <= c.delta);
}

TEST_CASE("pathological: artifacts and errors")
{
    const fs::path out = scratch("path");
    CHECK(invoke({"pathological", "--modulus", "holder:0.5", "--c", "5", "--terms", "4", "--probe-x",
                  "0.3333333333333333", "--out", out.string()}) == 0);
    const auto fam = nlohmann::json::parse(slurp(out / "family.json"));
    CHECK(fam["verification"]["all"] == true);
    CHECK(fam["a"][0] == "88106");
    for (const auto& p : fam["probes"])
        if (p["m"].get<int>() >= 2) CHECK(p["exceeds"] == true);
    CHECK(line_count(slurp(out / "samples.csv")) == 1002);
    CHECK(line_count(slurp(out / "probe.csv")) == 5);
    CHECK(fs::exists(out / "omega_star.csv"));

    CHECK(invoke({"pathological", "--terms", "0", "--out", (out / "z").string()}) == 2);
    CHECK(invoke({"pathological", "--modulus", "nonsense", "--out", (out / "m").string()}) == 2);
}

TEST_CASE("weierstrass amplitudes read a family file")
{
    const fs::path dir = scratch("wamp");
    REQUIRE(invoke({"pathological", "--terms", "2", "--out", dir.string()}) == 0);
    const char* doc = R"(
n: 2
xi0: [1, 1.6180339887498949]
delta: 0.1
epsilon: 1.0e-8
perturbation:
  terms:
    - {type: cos, k: [1, 0], l: [0, 0], amplitude: {kind: weierstrass, index: 0, family: family.json}}
)";
    const ProblemConfig c = parse_config(doc, dir);
    const Problem p = build_problem(c);
    Vector xi(2);
    xi << 0.37, 1.6;
    const nlohmann::json fj = nlohmann::json::parse(slurp(dir / "family.json"));
    const auto fam = family_from_json(fj);
    Vector z = Vector::Zero(2);
    CHECK(evaluate_real(p.perturbation(xi), z, z) == doctest::Approx(eval_weierstrass(fam, 0.37).value).epsilon(1e-14));

    const ProblemConfig missing = parse_config(doc, dir / "nowhere");
    CHECK_THROWS_AS(build_problem(missing), ConfigError);
}

TEST_CASE("check-dioph exit codes")
{
    CHECK(invoke({"check-dioph", "1,1.6180339887", "--gamma", "0.1", "--tau", "1.2", "--kmax", "100"}) == 0);
    CHECK(invoke({"check-dioph", "1,2"}) == 3);
    CHECK(invoke({"check-dioph", "1,0.5,0.25"}) == 3);
    CHECK(invoke({"check-dioph", "1,x"}) == 2);
    CHECK(invoke({"check-dioph", "1,1.618", "--gamma", "auto"}) == 2);
    CHECK(invoke({"check-dioph", "1,1.6180339887", "--gamma", "auto", "--eps", "1e-20"}) == 0);

    const fs::path out = scratch("dioph");
    CHECK(invoke({"check-dioph", "1,1.6180339887", "--out", out.string()}) == 0);
    const auto j = nlohmann::json::parse(slurp(out / "dioph.json"));
    CHECK(j["min_scaled"] == 1.0);
}

TEST_CASE("compare-moduli")
{
    const fs::path out = scratch("cmp");
    CHECK(invoke({"compare-moduli", "--modulus", "holder:0.5", "--modulus", "loglip", "--out", out.string()}) == 0);
    const auto j = nlohmann::json::parse(slurp(out / "compare.json"));
    CHECK(j["forward"]["established"] == true);
    CHECK(j["reverse"]["established"] == false);
    CHECK(invoke({"compare-moduli", "--modulus", "holder:0.5"}) == 2);
    CHECK(invoke({"compare-moduli", "--modulus", "holder:0.5", "--modulus", "what"}) == 2);
}

TEST_CASE("write_atomic replaces the target")
{
    const fs::path dir = scratch("atomic");
    write_atomic(dir / "x.txt", "one");
    write_atomic(dir / "x.txt", "two");
    CHECK(slurp(dir / "x.txt") == "two");
    CHECK_FALSE(fs::exists(dir / "x.txt.tmp"));
}
