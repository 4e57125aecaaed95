#include "kam/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include "kam/weierstrass.hpp"

namespace kam::cli {

namespace fs = std::filesystem;

namespace {

const double kPhi = 0.5 * (1.0 + std::sqrt(5.0));

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

Vector to_vector(const std::vector<double>& v)
{
    Vector out(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
    return out;
}

// Collects field-level errors instead of stopping at the first.
class Reader {
public:
    explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

    template <typename T>
    void get(const YAML::Node& parent, const std::string& key, T& out, const std::string& path)
    {
        if (!parent || !parent.IsMap()) return;
        const YAML::Node node = parent[key];
        if (!node) return;
        try {
            out = node.as<T>();
        } catch (const YAML::Exception&) {
            errors_.push_back(path + key + ": cannot parse value '" + dump(node) + "'");
        }
    }

    void error(const std::string& msg) { errors_.push_back(msg); }

    static std::string dump(const YAML::Node& n)
    {
        YAML::Emitter e;
        e << YAML::Flow << n;
        return e.c_str();
    }

private:
    std::vector<std::string>& errors_;
};

AmplitudeSpec parse_amplitude(const YAML::Node& node, Reader& rd, const std::string& path)
{
    AmplitudeSpec a;
    if (!node) return a;
    if (node.IsScalar()) {
        try {
            a.value = node.as<double>();
        } catch (const YAML::Exception&) {
            rd.error(path + ": amplitude must be a number or a mapping");
        }
        return a;
    }
    std::string kind = "constant";
    rd.get(node, "kind", kind, path + ".");
    rd.get(node, "value", a.value, path + ".");
    rd.get(node, "index", a.index, path + ".");
    rd.get(node, "scale", a.scale, path + ".");
    rd.get(node, "offset", a.offset, path + ".");
    rd.get(node, "family", a.family, path + ".");
    if (kind == "constant")
        a.kind = AmplitudeSpec::Kind::Constant;
    else if (kind == "linear")
        a.kind = AmplitudeSpec::Kind::Linear;
    else if (kind == "weierstrass")
        a.kind = AmplitudeSpec::Kind::Weierstrass;
    else
        rd.error(path + ".kind: expected constant | linear | weierstrass, got '" + kind + "'");
    return a;
}

const char* amplitude_kind(AmplitudeSpec::Kind k)
{
    switch (k) {
    case AmplitudeSpec::Kind::Constant: return "constant";
    case AmplitudeSpec::Kind::Linear: return "linear";
    case AmplitudeSpec::Kind::Weierstrass: return "weierstrass";
    }
    return "constant";
}

// piecewise map of the zero-measure example, one component
double example_component(double t, const WeierstrassFamily& lo, const WeierstrassFamily& hi)
{
    if (t < -0.5) return -0.5 + (eval_weierstrass(lo, t).value - eval_weierstrass(lo, -0.5).value);
    if (t > 0.5) return 0.5 + (eval_weierstrass(hi, t).value - eval_weierstrass(hi, 0.5).value);
    return t;
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p);
    if (!in) throw ConfigError({"cannot open '" + p.string() + "'"});
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(errors.empty() ? "invalid configuration" : errors.front()), errors_(std::move(errors))
{
}

bool is_builtin(const std::string& name) { return name == "smooth-benchmark" || name == "example-7.2"; }

ProblemConfig builtin_config(const std::string& name)
{
    ProblemConfig c;
    if (name == "smooth-benchmark") {
        c.name = name;
        c.n = 2;
        c.xi0 = {1.0, kPhi};
        c.delta = 0.1;
        c.epsilon = 1e-6;
        c.tau = 1.2;
        c.map = "identity";
        c.steps = 5;
        TermSpec a;
        a.k = {1, 0};
        a.l = {0, 0};
        TermSpec b;
        b.k = {1, 1};
        b.l = {0, 0};
        TermSpec lin;
        lin.k = {0, 0};
        lin.l = {1, 0};
        lin.amplitude.kind = AmplitudeSpec::Kind::Linear;
        lin.amplitude.index = 0;
        c.terms = {a, b, lin};
        return c;
    }
    if (name == "example-7.2") {
        c.name = name;
        c.n = 2;
        c.xi0 = {0.15, 0.15 * kPhi};
        c.delta = 0.125;
        c.epsilon = 1e-8;
        c.tau = 1.2;
        c.gamma = 0.1;
        c.map = "example-7.2";
        c.lower_modulus = "lipschitz";
        c.upper_modulus = "lipschitz";
        c.perturbation_builtin = "example-7.2";
        c.steps = 3;
        c.verify_horizon = 100.0;
        c.notes = "floating-point parameters stand in for the rational parameter set of the example";
        return c;
    }
    throw ConfigError({"unknown builtin '" + name + "'"});
}

ProblemConfig parse_config(const std::string& yaml_text, const fs::path& base_dir)
{
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError({std::string("YAML syntax: ") + e.what()});
    }
    if (!root.IsMap()) throw ConfigError({"config root must be a mapping"});

    std::vector<std::string> errors;
    Reader rd(errors);
    ProblemConfig c;
    if (root["builtin"]) {
        const auto name = root["builtin"].as<std::string>();
        if (!is_builtin(name)) throw ConfigError({"builtin: unknown name '" + name + "'"});
        c = builtin_config(name);
    }
    c.base_dir = base_dir;
    rd.get(root, "name", c.name, "");
    rd.get(root, "n", c.n, "");
    rd.get(root, "xi0", c.xi0, "");
    rd.get(root, "delta", c.delta, "");
    rd.get(root, "epsilon", c.epsilon, "");
    rd.get(root, "tau", c.tau, "");
    rd.get(root, "seed", c.seed, "");
    rd.get(root, "notes", c.notes, "");
    if (root["gamma"]) {
        std::string g;
        rd.get(root, "gamma", g, "");
        if (g == "auto") {
            c.gamma.reset();
        } else {
            double v = 0.0;
            rd.get(root, "gamma", v, "");
            c.gamma = v;
        }
    }

    if (const auto fq = root["frequency"]) {
        rd.get(fq, "map", c.map, "frequency.");
        rd.get(fq, "coefficient", c.map_coefficient, "frequency.");
        rd.get(fq, "matrix", c.matrix, "frequency.");
        rd.get(fq, "lower_modulus", c.lower_modulus, "frequency.");
        if (const auto fam = fq["families"]) {
            rd.get(fam, "modulus", c.family_modulus, "frequency.families.");
            rd.get(fam, "c", c.family_c, "frequency.families.");
            rd.get(fam, "M", c.family_M, "frequency.families.");
        }
    }
    if (const auto pt = root["perturbation"]) {
        rd.get(pt, "upper_modulus", c.upper_modulus, "perturbation.");
        rd.get(pt, "builtin", c.perturbation_builtin, "perturbation.");
        if (const auto terms = pt["terms"]) {
            c.terms.clear();
            if (!terms.IsSequence()) {
                rd.error("perturbation.terms: expected a list");
            } else {
                for (std::size_t i = 0; i < terms.size(); ++i) {
                    const std::string path = "perturbation.terms[" + std::to_string(i) + "]";
                    TermSpec t;
                    rd.get(terms[i], "type", t.type, path + ".");
                    rd.get(terms[i], "k", t.k, path + ".");
                    rd.get(terms[i], "l", t.l, path + ".");
                    t.amplitude = parse_amplitude(terms[i]["amplitude"], rd, path + ".amplitude");
                    c.terms.push_back(t);
                }
            }
        }
    }
    if (const auto sc = root["schedule"]) {
        rd.get(sc, "steps", c.steps, "schedule.");
        rd.get(sc, "kmax", c.kmax, "schedule.");
        rd.get(sc, "lie_order", c.lie_order, "schedule.");
        rd.get(sc, "r", c.r, "schedule.");
        rd.get(sc, "s", c.s, "schedule.");
        rd.get(sc, "c0", c.c0, "schedule.");
        if (sc["eta"]) {
            std::string e;
            rd.get(sc, "eta", e, "schedule.");
            if (e == "auto")
                c.eta = 0;
            else
                rd.get(sc, "eta", c.eta, "schedule.");
        }
    }
    if (const auto tol = root["tolerances"]) {
        rd.get(tol, "translation", c.translation_tol, "tolerances.");
        rd.get(tol, "stop", c.stop_tol, "tolerances.");
    }
    if (const auto v = root["verify"]) {
        rd.get(v, "horizon", c.verify_horizon, "verify.");
        rd.get(v, "dt", c.verify_dt, "verify.");
        rd.get(v, "samples", c.verify_samples, "verify.");
    }

    for (const auto& e : validate(c)) errors.push_back(e);
    if (!errors.empty()) throw ConfigError(errors);
    return c;
}

ProblemConfig load_config(const std::string& name_or_path)
{
    if (is_builtin(name_or_path)) return builtin_config(name_or_path);
    const fs::path p(name_or_path);
    return parse_config(read_file(p), p.has_parent_path() ? p.parent_path() : fs::path("."));
}

std::vector<std::string> validate(const ProblemConfig& c)
{
    std::vector<std::string> e;
    if (c.n < 1 || c.n > kMaxDim) e.push_back("n: must be in [1, " + std::to_string(kMaxDim) + "]");
    if (static_cast<int>(c.xi0.size()) != c.n) e.push_back("xi0: expected " + std::to_string(c.n) + " entries");
    if (!(c.delta > 0.0)) e.push_back("delta: must be positive");
    if (!(c.epsilon > 0.0)) e.push_back("epsilon: must be positive");
    if (!(c.tau > 0.0)) e.push_back("tau: must be positive");
    if (c.gamma && !(*c.gamma > 0.0)) e.push_back("gamma: must be 'auto' or positive");
    if (c.steps < 0) e.push_back("schedule.steps: must be non-negative");
    if (c.kmax < 1) e.push_back("schedule.kmax: must be at least 1");
    if (c.lie_order < 2) e.push_back("schedule.lie_order: must be at least 2");
    if (!(c.r > 0.0)) e.push_back("schedule.r: must be positive");
    if (!(c.s > 0.0)) e.push_back("schedule.s: must be positive");
    if (c.eta < 0) e.push_back("schedule.eta: must be 'auto' or positive");
    if (!(c.translation_tol > 0.0)) e.push_back("tolerances.translation: must be positive");
    if (c.stop_tol < 0.0) e.push_back("tolerances.stop: must be non-negative");
    if (!(c.verify_horizon > 0.0) || !(c.verify_dt > 0.0)) e.push_back("verify: horizon and dt must be positive");
    if (c.verify_samples < 1) e.push_back("verify.samples: must be at least 1");

    static const char* maps[] = {"identity", "quadratic", "scaled", "linear", "example-7.2"};
    if (std::find(std::begin(maps), std::end(maps), c.map) == std::end(maps))
        e.push_back("frequency.map: unknown map '" + c.map + "'");
    if (c.map == "linear") {
        bool ok = static_cast<int>(c.matrix.size()) == c.n;
        for (const auto& row : c.matrix) ok = ok && static_cast<int>(row.size()) == c.n;
        if (!ok) e.push_back("frequency.matrix: expected an n x n matrix");
    }
    if (c.map == "example-7.2" && c.family_c.size() != 4)
        e.push_back("frequency.families.c: expected four values");
    for (const auto* spec : {&c.lower_modulus, &c.upper_modulus, &c.family_modulus}) {
        try {
            ModulusOfContinuity::parse(*spec);
        } catch (const std::exception& ex) {
            e.push_back(std::string("modulus: ") + ex.what());
        }
    }
    if (!c.perturbation_builtin.empty() && c.perturbation_builtin != "example-7.2")
        e.push_back("perturbation.builtin: unknown '" + c.perturbation_builtin + "'");
    if (c.perturbation_builtin == "example-7.2" && c.map != "example-7.2")
        e.push_back("perturbation.builtin: example-7.2 needs frequency.map example-7.2");
    for (std::size_t i = 0; i < c.terms.size(); ++i) {
        const auto& t = c.terms[i];
        const std::string path = "perturbation.terms[" + std::to_string(i) + "]";
        if (t.type != "cos" && t.type != "sin") e.push_back(path + ".type: expected cos or sin");
        if (static_cast<int>(t.k.size()) != c.n) e.push_back(path + ".k: expected " + std::to_string(c.n) + " entries");
        if (static_cast<int>(t.l.size()) != c.n) e.push_back(path + ".l: expected " + std::to_string(c.n) + " entries");
        for (int v : t.l)
            if (v < 0) e.push_back(path + ".l: exponents must be non-negative");
        if (t.amplitude.kind != AmplitudeSpec::Kind::Constant && (t.amplitude.index < 0 || t.amplitude.index >= c.n))
            e.push_back(path + ".amplitude.index: out of range");
        if (t.amplitude.kind == AmplitudeSpec::Kind::Weierstrass && t.amplitude.family.empty())
            e.push_back(path + ".amplitude.family: a family file is required");
    }
    return e;
}

std::string emit_config(const ProblemConfig& c)
{
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << c.name;
    out << YAML::Key << "n" << YAML::Value << c.n;
    out << YAML::Key << "xi0" << YAML::Value << YAML::Flow << c.xi0;
    out << YAML::Key << "delta" << YAML::Value << c.delta;
    out << YAML::Key << "epsilon" << YAML::Value << c.epsilon;
    out << YAML::Key << "tau" << YAML::Value << c.tau;
    out << YAML::Key << "gamma" << YAML::Value;
    if (c.gamma)
        out << *c.gamma;
    else
        out << "auto";
    out << YAML::Key << "seed" << YAML::Value << c.seed;
    if (!c.notes.empty()) out << YAML::Key << "notes" << YAML::Value << c.notes;

    out << YAML::Key << "frequency" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "map" << YAML::Value << c.map;
    if (c.map == "quadratic" || c.map == "scaled") out << YAML::Key << "coefficient" << YAML::Value << c.map_coefficient;
    if (c.map == "linear") {
        out << YAML::Key << "matrix" << YAML::Value << YAML::BeginSeq;
        for (const auto& row : c.matrix) out << YAML::Flow << row;
        out << YAML::EndSeq;
    }
    out << YAML::Key << "lower_modulus" << YAML::Value << c.lower_modulus;
    if (c.map == "example-7.2") {
        out << YAML::Key << "families" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "modulus" << YAML::Value << c.family_modulus;
        out << YAML::Key << "c" << YAML::Value << YAML::Flow << c.family_c;
        out << YAML::Key << "M" << YAML::Value << c.family_M;
        out << YAML::EndMap;
    }
    out << YAML::EndMap;

    out << YAML::Key << "perturbation" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "upper_modulus" << YAML::Value << c.upper_modulus;
    if (!c.perturbation_builtin.empty()) out << YAML::Key << "builtin" << YAML::Value << c.perturbation_builtin;
    if (!c.terms.empty()) {
        out << YAML::Key << "terms" << YAML::Value << YAML::BeginSeq;
        for (const auto& t : c.terms) {
            out << YAML::Flow << YAML::BeginMap;
            out << YAML::Key << "type" << YAML::Value << t.type;
            out << YAML::Key << "k" << YAML::Value << YAML::Flow << t.k;
            out << YAML::Key << "l" << YAML::Value << YAML::Flow << t.l;
            out << YAML::Key << "amplitude" << YAML::Value << YAML::BeginMap;
            out << YAML::Key << "kind" << YAML::Value << amplitude_kind(t.amplitude.kind);
            if (t.amplitude.kind == AmplitudeSpec::Kind::Constant) {
                out << YAML::Key << "value" << YAML::Value << t.amplitude.value;
            } else {
                out << YAML::Key << "index" << YAML::Value << t.amplitude.index;
                out << YAML::Key << "scale" << YAML::Value << t.amplitude.scale;
                out << YAML::Key << "offset" << YAML::Value << t.amplitude.offset;
                if (t.amplitude.kind == AmplitudeSpec::Kind::Weierstrass)
                    out << YAML::Key << "family" << YAML::Value << t.amplitude.family;
            }
            out << YAML::EndMap << YAML::EndMap;
        }
        out << YAML::EndSeq;
    }
    out << YAML::EndMap;

    out << YAML::Key << "schedule" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "steps" << YAML::Value << c.steps;
    out << YAML::Key << "kmax" << YAML::Value << c.kmax;
    out << YAML::Key << "lie_order" << YAML::Value << c.lie_order;
    out << YAML::Key << "r" << YAML::Value << c.r;
    out << YAML::Key << "s" << YAML::Value << c.s;
    out << YAML::Key << "eta" << YAML::Value;
    if (c.eta > 0)
        out << c.eta;
    else
        out << "auto";
    out << YAML::Key << "c0" << YAML::Value << c.c0;
    out << YAML::EndMap;

    out << YAML::Key << "tolerances" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "translation" << YAML::Value << c.translation_tol;
    out << YAML::Key << "stop" << YAML::Value << c.stop_tol;
    out << YAML::EndMap;

    out << YAML::Key << "verify" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "horizon" << YAML::Value << c.verify_horizon;
    out << YAML::Key << "dt" << YAML::Value << c.verify_dt;
    out << YAML::Key << "samples" << YAML::Value << c.verify_samples;
    out << YAML::EndMap;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

Problem build_problem(const ProblemConfig& c)
{
    if (auto errs = validate(c); !errs.empty()) throw ConfigError(errs);
    const Vector xi0 = to_vector(c.xi0);
    Problem p;
    p.epsilon = c.epsilon;
    p.descriptor = c.name;

    if (c.map == "identity") {
        p.freq = identity_map(xi0, c.delta);
    } else if (c.map == "quadratic") {
        p.freq = quadratic_map(xi0, c.delta, c.map_coefficient);
    } else if (c.map == "scaled") {
        p.freq = scaled_map(xi0, c.delta, c.map_coefficient);
    } else if (c.map == "linear") {
        Eigen::MatrixXd A(c.n, c.n);
        for (int i = 0; i < c.n; ++i)
            for (int j = 0; j < c.n; ++j) A(i, j) = c.matrix[i][j];
        p.freq = identity_map(xi0, c.delta);
        p.freq.eval = [A](const Vector& xi) { return Vector(A * xi); };
        p.freq.descriptor = "linear";
    }
    std::shared_ptr<std::vector<WeierstrassFamily>> g;
    if (c.map == "example-7.2") {
        g = std::make_shared<std::vector<WeierstrassFamily>>();
        const auto w = ModulusOfContinuity::parse(c.family_modulus);
        try {
            for (double cc : c.family_c) g->push_back(build_weierstrass(w, BSequence::gaussian(cc), c.family_M));
        } catch (const std::exception& ex) {
            throw ConfigError({std::string("frequency.families: ") + ex.what()});
        }
        p.freq = identity_map(xi0, c.delta);
        p.freq.eval = [g](const Vector& xi) {
            Vector w(xi.size());
            for (int i = 0; i < xi.size(); ++i) w[i] = example_component(xi[i], (*g)[0], (*g)[1]);
            return w;
        };
        p.freq.smooth = false;
        p.freq.descriptor = "example-7.2 piecewise map from four nowhere-Hoelder families";
    }
    p.freq.lower_modulus = ModulusOfContinuity::parse(c.lower_modulus);

    if (c.perturbation_builtin == "example-7.2") {
        const int n = c.n;
        p.perturbation = [g, n](const Vector& xi) {
            Vector coeff(n);
            for (int i = 0; i < n; ++i) coeff[i] = example_component(xi[i], (*g)[2], (*g)[3]);
            return Series::linear(coeff, 0, 1);
        };
        return p;
    }

    int K = 0, L = 0;
    for (const auto& t : c.terms) {
        int kn = 0, ln = 0;
        for (int v : t.k) kn += std::abs(v);
        for (int v : t.l) ln += v;
        K = std::max(K, kn);
        L = std::max(L, ln);
    }
    struct Compiled {
        TermSpec spec;
        std::shared_ptr<WeierstrassFamily> fam;
    };
    std::vector<Compiled> terms;
    for (const auto& t : c.terms) {
        Compiled ct{t, nullptr};
        if (t.amplitude.kind == AmplitudeSpec::Kind::Weierstrass) {
            const fs::path file = c.base_dir / t.amplitude.family;
            try {
                ct.fam = std::make_shared<WeierstrassFamily>(
                    family_from_json(nlohmann::json::parse(read_file(file))));
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& ex) {
                throw ConfigError({"perturbation: family file '" + file.string() + "': " + ex.what()});
            }
        }
        terms.push_back(ct);
    }
    const int n = c.n;
    p.perturbation = [terms, n, K, L](const Vector& xi) {
        Series P(n, K, L);
        for (const auto& ct : terms) {
            const auto& a = ct.spec.amplitude;
            double amp = a.value;
            if (a.kind == AmplitudeSpec::Kind::Linear) amp = a.scale * xi[a.index] + a.offset;
            if (a.kind == AmplitudeSpec::Kind::Weierstrass)
                amp = a.scale * eval_weierstrass(*ct.fam, xi[a.index]).value + a.offset;
            if (ct.spec.type == "cos")
                P += Series::cos_term(ct.spec.k, ct.spec.l, amp, K, L);
            else
                P += Series::sin_term(ct.spec.k, ct.spec.l, amp, K, L);
        }
        return P;
    };
    return p;
}

RunOptions run_options(const ProblemConfig& c)
{
    RunOptions o;
    o.steps = c.steps;
    o.stop_tol = c.stop_tol;
    o.translation_tol = c.translation_tol;
    o.kmax = c.kmax;
    o.lie_order = c.lie_order;
    o.r = c.r;
    o.s = c.s;
    o.eta = c.eta;
    o.c0 = c.c0;
    o.gamma = c.gamma ? *c.gamma : 0.0;
    o.tau = c.tau;
    o.seed = c.seed;
    return o;
}

int exit_code(Cause c)
{
    switch (c) {
    case Cause::None: return kExitOk;
    case Cause::Certification:
    case Cause::SmallDivisor: return kExitCertification;
    case Cause::NonContraction:
    case Cause::SingularSystem: return kExitNonContraction;
    case Cause::TranslationFailure:
    case Cause::BoundaryApproach:
    case Cause::Integrator: return kExitTranslation;
    }
    return kExitTranslation;
}

void write_atomic(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

int cmd_run(const std::string& config, const fs::path& out, const RunOverrides& ov)
{
    ProblemConfig cfg;
    Problem problem;
    try {
        cfg = load_config(config);
        if (ov.eps) cfg.epsilon = *ov.eps;
        if (ov.tau) cfg.tau = *ov.tau;
        if (ov.gamma) {
            if (*ov.gamma == "auto") {
                cfg.gamma.reset();
            } else {
                try {
                    cfg.gamma = std::stod(*ov.gamma);
                } catch (const std::exception&) {
                    throw ConfigError({"--gamma: expected 'auto' or a number"});
                }
            }
        }
        if (ov.steps) cfg.steps = *ov.steps;
        if (ov.seed) cfg.seed = *ov.seed;
        if (ov.kmax) cfg.kmax = *ov.kmax;
        problem = build_problem(cfg);
    } catch (const ConfigError& e) {
        for (const auto& msg : e.errors()) std::cerr << "config error: " << msg << '\n';
        return kExitConfig;
    }

    write_atomic(out / "config.resolved.yaml", emit_config(cfg));
    const ConvergenceTrace trace = run(problem, run_options(cfg));

    std::optional<TorusReport> torus;
    if (trace.success()) {
        const KamState& fs_ = trace.final_state;
        Series residual = fs_.P + Series::linear(Vector(fs_.nf.lin - fs_.nf.omega0), fs_.P.k_max(), fs_.P.l_max());
        try {
            torus = verify_torus(state_hamiltonian(fs_), residual, fs_.nf.omega0, cfg.verify_horizon, cfg.verify_dt,
                                 cfg.verify_samples, cfg.seed);
        } catch (const KamError& e) {
            std::cerr << "torus verification: " << e.what() << '\n';
        }
    }

    nlohmann::json header = trace_header(trace, problem);
    header["config"] = cfg.name;
    if (!cfg.notes.empty()) header["notes"] = cfg.notes;
    std::string lines = header.dump() + "\n";
    for (const auto& r : trace.steps) lines += nlohmann::json(r).dump() + "\n";
    write_atomic(out / "trace.jsonl", lines);

    nlohmann::json summary = trace_summary(trace, torus ? &*torus : nullptr);
    if (!trace.dioph.valid) summary["witness_k"] = trace.dioph.witness_k;
    write_atomic(out / "summary.json", summary.dump(2) + "\n");

    std::ostringstream csv;
    csv << "nu,P_norm,xi_increment,freq_residual\n";
    for (std::size_t i = 0; i < trace.steps.size(); ++i)
        csv << i << ',' << fmt(trace.P_norms[i]) << ',' << fmt(trace.increments[i]) << ','
            << fmt(trace.freq_residuals[i]) << '\n';
    if (!trace.P_norms.empty())
        csv << trace.steps.size() << ',' << fmt(trace.P_norms[trace.steps.size()]) << ",,\n";
    write_atomic(out / "trace.csv", csv.str());

    if (!trace.success()) {
        std::cerr << "run stopped (" << to_string(trace.cause) << "): " << trace.message << '\n';
        if (!trace.dioph.valid) std::cerr << "witness k = " << nlohmann::json(trace.dioph.witness_k).dump() << '\n';
    }
    std::cout << "steps " << trace.steps.size() << ", freq residual " << fmt(trace.final_residual)
              << ", final |P| " << fmt(trace.P_norms.empty() ? 0.0 : trace.P_norms.back()) << ", outputs in "
              << out.string() << '\n';
    return exit_code(trace.cause);
}

int cmd_pathological(const std::string& modulus, double c, int M, double probe_x, const fs::path& out)
{
    WeierstrassFamily fam;
    try {
        if (M < 1) throw std::invalid_argument("--terms must be at least 1 (empty family)");
        fam = build_weierstrass(ModulusOfContinuity::parse(modulus), BSequence::gaussian(c), M);
    } catch (const InfeasibleSequence& e) {
        std::cerr << "infeasible b-sequence at m = " << e.first_bad_m << ": " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    const FamilyCheck check = verify(fam);

    // probe from the first m with |a_m x| >= 1
    int m_first = 1;
    while (m_first <= M && std::abs(static_cast<double>(fam.a[m_first - 1]) * probe_x) < 1.0) ++m_first;
    std::vector<ProbeResult> probes;
    if (m_first <= M) probes = probe_quotient_growth(fam, probe_x, m_first, M);

    nlohmann::json j = fam;
    j["verification"] = check;
    j["probe_x"] = probe_x;
    j["probes"] = probes;
    write_atomic(out / "family.json", j.dump(2) + "\n");

    std::ostringstream samples;
    write_samples_csv(samples, fam, 0.0, 1.0, 1001);
    write_atomic(out / "samples.csv", samples.str());

    std::ostringstream probe_csv;
    probe_csv << "m,dx,quotient,threshold,r_m,degenerate\n";
    for (const auto& p : probes)
        probe_csv << p.m << ',' << fmt(p.dx) << ',' << fmt(p.quotient) << ',' << fmt(p.threshold) << ','
                  << fmt(p.r_m) << ',' << (p.degenerate ? 1 : 0) << '\n';
    write_atomic(out / "probe.csv", probe_csv.str());

    std::ostringstream ws;
    ws << "h,N,omega_star\n";
    for (int e = 0; e <= 250; e += 2) {
        const double h = std::ldexp(1.0, -e);
        const auto w = omega_star(fam, h);
        ws << fmt(h) << ',' << w.N << ',' << fmt(w.value) << '\n';
    }
    write_atomic(out / "omega_star.csv", ws.str());

    bool probes_ok = true;
    for (const auto& p : probes)
        if (!p.degenerate && !p.exceeds) probes_ok = false;
    std::cout << "family M=" << M << " verified " << (check.all() ? "true" : "false") << ", probes above m/2 "
              << (probes_ok ? "true" : "false") << ", outputs in " << out.string() << '\n';
    return check.all() && probes_ok ? kExitOk : kExitCertification;
}

int cmd_check_dioph(const std::string& omega, const std::string& gamma, double tau, int kmax,
                    const std::optional<double>& eps, const fs::path& out)
{
    std::vector<double> w;
    try {
        std::stringstream ss(omega);
        std::string item;
        while (std::getline(ss, item, ',')) w.push_back(std::stod(item));
        if (w.empty() || static_cast<int>(w.size()) > kMaxDim) throw std::invalid_argument("bad length");
    } catch (const std::exception&) {
        std::cerr << "config error: omega must be 1 to " << kMaxDim << " comma-separated numbers\n";
        return kExitConfig;
    }
    double g = 0.0;
    if (gamma == "auto") {
        if (!eps) {
            std::cerr << "config error: --gamma auto needs --eps\n";
            return kExitConfig;
        }
        g = std::pow(*eps, 1.0 / 20.0);
    } else {
        try {
            g = std::stod(gamma);
        } catch (const std::exception&) {
            std::cerr << "config error: --gamma expects 'auto' or a number\n";
            return kExitConfig;
        }
    }
    DiophantineCert cert;
    try {
        cert = check_diophantine(to_vector(w), g, tau, kmax);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    const nlohmann::json j = cert;
    std::cout << j.dump() << '\n';
    if (!out.empty()) write_atomic(out / "dioph.json", j.dump(2) + "\n");
    return cert.valid ? kExitOk : kExitCertification;
}

int cmd_compare_moduli(const std::vector<std::string>& moduli, const fs::path& out)
{
    if (moduli.size() != 2) {
        std::cerr << "config error: compare-moduli needs exactly two --modulus values\n";
        return kExitConfig;
    }
    ModulusOfContinuity w1, w2;
    try {
        w1 = ModulusOfContinuity::parse(moduli[0]);
        w2 = ModulusOfContinuity::parse(moduli[1]);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    nlohmann::json j = {{"w1", w1.spec()},
                        {"w2", w2.spec()},
                        {"forward", compare_moduli(w1, w2)},
                        {"reverse", compare_moduli(w2, w1)},
                        {"w1_check", validate(w1)},
                        {"w2_check", validate(w2)}};
    std::cout << w1.spec() << " vs " << w2.spec() << ": " << j["forward"]["relation"].get<std::string>()
              << " (observed sup " << fmt(j["forward"]["observed_sup"].get<double>()) << ")\n";
    if (!out.empty()) write_atomic(out / "compare.json", j.dump(2) + "\n");
    return kExitOk;
}

int main_entry(int argc, char** argv)
{
    CLI::App app{"Frequency-preserving KAM iteration and weak-regularity toolkit"};
    app.require_subcommand(1);

    std::string config = "smooth-benchmark";
    std::string out = "out";
    RunOverrides ov;
    double eps = 0.0, tau = 1.2;
    std::string gamma;
    int steps = 0, kmax = 0;
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "run the KAM iteration on a config file or builtin");
    run->add_option("--config", config, "YAML config path or builtin (smooth-benchmark, example-7.2)");
    run->add_option("--out", out, "output directory");
    auto* o_eps = run->add_option("--eps", eps, "perturbation size");
    auto* o_tau = run->add_option("--tau", tau, "Diophantine exponent");
    auto* o_gamma = run->add_option("--gamma", gamma, "Diophantine constant or 'auto'");
    auto* o_steps = run->add_option("--steps", steps, "number of KAM steps");
    auto* o_seed = run->add_option("--seed", seed, "sampling seed");
    auto* o_kmax = run->add_option("--kmax", kmax, "Fourier truncation");

    std::string modulus = "holder:0.5";
    double c = 5.0;
    int terms = 4;
    double probe_x = 1.0 / 3.0;
    std::string p_out = "out";
    auto* path = app.add_subcommand("pathological", "build and probe a nowhere-continuous family");
    path->add_option("--modulus", modulus, "modulus spec, e.g. holder:0.5");
    path->add_option("--c", c, "b_n = exp(-c n^2)");
    path->add_option("--terms", terms, "number of terms M");
    path->add_option("--probe-x", probe_x, "probe point");
    path->add_option("--out", p_out, "output directory");

    std::string omega;
    std::string d_gamma = "0.1";
    double d_tau = 1.2;
    int d_kmax = 100;
    double d_eps = 0.0;
    std::string d_out;
    auto* dioph = app.add_subcommand("check-dioph", "verify a Diophantine vector up to a cutoff");
    dioph->add_option("omega", omega, "comma-separated components")->required();
    dioph->add_option("--gamma", d_gamma, "Diophantine constant or 'auto' (needs --eps)");
    dioph->add_option("--tau", d_tau, "Diophantine exponent");
    dioph->add_option("--kmax", d_kmax, "largest |k| scanned");
    auto* o_deps = dioph->add_option("--eps", d_eps, "eps for --gamma auto");
    dioph->add_option("--out", d_out, "directory for dioph.json");

    std::vector<std::string> moduli;
    std::string m_out;
    auto* cmp = app.add_subcommand("compare-moduli", "estimate the ordering of two moduli");
    cmp->add_option("--modulus", moduli, "modulus spec, give twice")->expected(1, 2);
    cmp->add_option("--out", m_out, "directory for compare.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) {
            if (*o_eps) ov.eps = eps;
            if (*o_tau) ov.tau = tau;
            if (*o_gamma) ov.gamma = gamma;
            if (*o_steps) ov.steps = steps;
            if (*o_seed) ov.seed = seed;
            if (*o_kmax) ov.kmax = kmax;
            return cmd_run(config, out, ov);
        }
        if (*path) return cmd_pathological(modulus, c, terms, probe_x, p_out);
        if (*dioph) return cmd_check_dioph(omega, d_gamma, d_tau, d_kmax, *o_deps ? std::optional<double>(d_eps) : std::nullopt, d_out);
        if (*cmp) return cmd_compare_moduli(moduli, m_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitOk;
}

}  // namespace kam::cli
