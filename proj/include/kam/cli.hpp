#ifndef KAM_CLI_HPP
#define KAM_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kam/driver.hpp"

namespace kam::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitCertification = 3,
    kExitNonContraction = 4,
    kExitTranslation = 5,
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

private:
    std::vector<std::string> errors_;
};

/// amplitude(xi) of one perturbation term.
struct AmplitudeSpec {
    enum class Kind { Constant, Linear, Weierstrass };
    Kind kind = Kind::Constant;
    double value = 1.0;   // constant
    int index = 0;        // component of xi for linear / weierstrass
    double scale = 1.0;   // linear and weierstrass: scale * g(xi_index) + offset
    double offset = 0.0;
    std::string family;   // family JSON file, relative to the config
};

/// amplitude(xi) * y^l * cos(<k,x>) or sin(<k,x>).
struct TermSpec {
    std::string type = "cos";
    std::vector<int> k;
    std::vector<int> l;
    AmplitudeSpec amplitude;
};

struct ProblemConfig {
    std::string name = "custom";
    int n = 2;
    std::vector<double> xi0;
    double delta = 0.1;
    double epsilon = 1e-6;
    double tau = 1.2;
    std::optional<double> gamma;  // empty means eps^(1/20)
    std::uint64_t seed = 1;

    std::string map = "identity";  // identity | quadratic | scaled | linear | example-7.2
    double map_coefficient = 0.1;
    std::vector<std::vector<double>> matrix;
    std::string lower_modulus = "lipschitz";
    std::string upper_modulus = "lipschitz";

    std::string family_modulus = "holder:0.5";
    std::vector<double> family_c = {5.0, 6.0, 7.0, 8.0};
    int family_M = 4;

    std::string perturbation_builtin;  // "example-7.2" or empty
    std::vector<TermSpec> terms;

    int steps = 5;
    int kmax = 8;
    int lie_order = 6;
    double r = 0.5;
    double s = 1.0;
    int eta = 0;  // 0 means minimal
    double c0 = 1.0;

    double translation_tol = 1e-14;
    double stop_tol = 0.0;

    double verify_horizon = 100.0;
    double verify_dt = 0.5;
    int verify_samples = 8;

    std::string notes;
    std::filesystem::path base_dir = ".";
};

ProblemConfig builtin_config(const std::string& name);
bool is_builtin(const std::string& name);
ProblemConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir = ".");
/// A builtin name or a path to a YAML file.
ProblemConfig load_config(const std::string& name_or_path);
std::string emit_config(const ProblemConfig& cfg);
/// Field-level checks; returns the list of problems, empty when valid.
std::vector<std::string> validate(const ProblemConfig& cfg);

Problem build_problem(const ProblemConfig& cfg);
RunOptions run_options(const ProblemConfig& cfg);
int exit_code(Cause c);

struct RunOverrides {
    std::optional<double> eps;
    std::optional<double> tau;
    std::optional<std::string> gamma;
    std::optional<int> steps;
    std::optional<std::uint64_t> seed;
    std::optional<int> kmax;
};

int cmd_run(const std::string& config, const std::filesystem::path& out, const RunOverrides& ov);
int cmd_pathological(const std::string& modulus, double c, int M, double probe_x, const std::filesystem::path& out);
int cmd_check_dioph(const std::string& omega, const std::string& gamma, double tau, int kmax,
                    const std::optional<double>& eps, const std::filesystem::path& out);
int cmd_compare_moduli(const std::vector<std::string>& moduli, const std::filesystem::path& out);

/// Write to a sibling temporary and rename over the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);

int main_entry(int argc, char** argv);

}  // namespace kam::cli

#endif  // KAM_CLI_HPP
