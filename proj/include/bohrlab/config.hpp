#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bohrlab/errors.hpp"

namespace bohrlab {

// Every tunable the library exposes, with the defaults used when a key is
// absent.  The named constants are exactly the absolute constants the
// underlying arguments leave unspecified; each run logs the resolved set.
struct RunConfig {
    // constants
    double C_regular = 64.0;   // regularity constant for Bohr dilate search
    double c_main = 0.125;     // density increment fraction per outer step
    double c1_kk = 0.25;       // thickness target ending the inner iteration
    double c_inc = 0.0625;     // promised fraction of nu in the energy increment
    double c_rho = 1.0 / 32.0; // cap rho' <= c_rho * nu * alpha / d
    double c_cs = 1.0 / 2048.0; // cap rho' <= c_cs * lambda * alpha / d in the dichotomy
    double C_k = 16.0;         // sample count factor k = ceil(C_k * eps^-2 * p)
    double C_iter = 8.0;       // inner L/S iteration budget i0 <= ceil(C_iter / alpha)
    double C_steps = 16.0;     // outer iteration budget i0 <= C_steps * log(2/alpha)
    double C_chang = 8.0;      // entropy-bound constant in the spectral report
    double K_entropy = 1.0;    // relative-entropy level for dissociated hulls
    double tolerance = 1e-9;   // relative tolerance for all float comparisons

    // grids
    int lambda_points = 64;            // equispaced lambda grid in [1/2, 1)
    int eta_points = 8;                // eta grid +-k/(8 C d), k = 1..eta_points
    std::vector<double> dim_grid = {1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0};

    // caps
    std::int64_t size_cap = std::int64_t{1} << 20; // transforms and groups
    std::int64_t brute_cap = std::int64_t{1} << 12; // quadratic oracles

    // randomized subroutines
    int omega_trials = 64; // random disc-valued omegas per entropy certificate
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"constants",
             {{"C_regular", C_regular},
              {"c_main", c_main},
              {"c1_kk", c1_kk},
              {"c_inc", c_inc},
              {"c_rho", c_rho},
              {"c_cs", c_cs},
              {"C_k", C_k},
              {"C_iter", C_iter},
              {"C_steps", C_steps},
              {"C_chang", C_chang},
              {"K_entropy", K_entropy},
              {"tolerance", tolerance}}},
            {"grids",
             {{"lambda_points", lambda_points},
              {"eta_points", eta_points},
              {"dim_grid", dim_grid}}},
            {"caps", {{"size_cap", size_cap}, {"brute_cap", brute_cap}}},
            {"omega_trials", omega_trials},
            {"seed", seed}};
    }

    std::vector<double> lambda_grid() const {
        std::vector<double> g(static_cast<std::size_t>(lambda_points));
        for (int i = 0; i < lambda_points; ++i)
            g[static_cast<std::size_t>(i)] = 0.5 + 0.5 * i / static_cast<double>(lambda_points);
        return g;
    }

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0)) throw BadInput(std::string("config: ") + name + " must be positive");
        };
        positive(C_regular, "C_regular");
        positive(c_main, "c_main");
        positive(c1_kk, "c1_kk");
        positive(c_inc, "c_inc");
        positive(c_rho, "c_rho");
        positive(c_cs, "c_cs");
        positive(C_k, "C_k");
        positive(C_iter, "C_iter");
        positive(C_steps, "C_steps");
        positive(C_chang, "C_chang");
        positive(K_entropy, "K_entropy");
        if (!(tolerance > 0.0) || tolerance > 1e-3)
            throw BadInput("config: tolerance must lie in (0, 1e-3]");
        if (lambda_points < 1 || eta_points < 1)
            throw BadInput("config: grid point counts must be >= 1");
        if (dim_grid.empty()) throw BadInput("config: dim_grid must be nonempty");
        if (size_cap < 1 || brute_cap < 1) throw BadInput("config: caps must be >= 1");
        if (omega_trials < 1) throw BadInput("config: omega_trials must be >= 1");
    }
};

namespace detail {

// The sliver of TOML the config file uses: [section] headers, key = value
// with number / bool / "string" / [array of numbers] values, # comments.
struct TomlDoc {
    std::map<std::string, std::string> scalars;          // "section.key" -> raw value
    std::map<std::string, std::vector<double>> arrays;

    static std::string trim(const std::string& s) {
        std::size_t a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        std::size_t b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    static TomlDoc parse(std::istream& is) {
        TomlDoc doc;
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            // strip comments outside quotes
            bool quoted = false;
            for (std::size_t i = 0; i < line.size(); ++i) {
                if (line[i] == '"') quoted = !quoted;
                else if (line[i] == '#' && !quoted) { line.erase(i); break; }
            }
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw BadInput("config line " + std::to_string(lineno) + ": bad section header");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw BadInput("config line " + std::to_string(lineno) + ": expected key = value");
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty() || value.empty())
                throw BadInput("config line " + std::to_string(lineno) + ": empty key or value");
            std::string full = section.empty() ? key : section + "." + key;
            if (value.front() == '[') {
                if (value.back() != ']')
                    throw BadInput("config line " + std::to_string(lineno) + ": unterminated array");
                std::string inner = value.substr(1, value.size() - 2);
                for (char& c : inner)
                    if (c == ',') c = ' ';
                std::istringstream as(inner);
                std::vector<double> arr;
                double v;
                while (as >> v) arr.push_back(v);
                doc.arrays[full] = std::move(arr);
            } else {
                if (value.front() == '"') {
                    if (value.size() < 2 || value.back() != '"')
                        throw BadInput("config line " + std::to_string(lineno) + ": unterminated string");
                    value = value.substr(1, value.size() - 2);
                }
                doc.scalars[full] = value;
            }
        }
        return doc;
    }

    bool get(const std::string& key, double& out) const {
        auto it = scalars.find(key);
        if (it == scalars.end()) return false;
        try {
            std::size_t pos = 0;
            out = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw BadInput("config: key " + key + " has non-numeric value '" + it->second + "'");
        }
        return true;
    }

    bool get(const std::string& key, int& out) const {
        double v;
        if (!get(key, v)) return false;
        out = static_cast<int>(v);
        return true;
    }

    bool get(const std::string& key, std::int64_t& out) const {
        double v;
        if (!get(key, v)) return false;
        out = static_cast<std::int64_t>(v);
        return true;
    }

    bool get(const std::string& key, std::uint64_t& out) const {
        auto it = scalars.find(key);
        if (it == scalars.end()) return false;
        try {
            out = std::stoull(it->second);
        } catch (const std::exception&) {
            throw BadInput("config: key " + key + " has non-integer value '" + it->second + "'");
        }
        return true;
    }
};

} // namespace detail

inline RunConfig load_config(std::istream& is) {
    detail::TomlDoc doc = detail::TomlDoc::parse(is);
    RunConfig cfg;
    doc.get("constants.C_regular", cfg.C_regular);
    doc.get("constants.c_main", cfg.c_main);
    doc.get("constants.c1_kk", cfg.c1_kk);
    doc.get("constants.c_inc", cfg.c_inc);
    doc.get("constants.c_rho", cfg.c_rho);
    doc.get("constants.c_cs", cfg.c_cs);
    doc.get("constants.C_k", cfg.C_k);
    doc.get("constants.C_iter", cfg.C_iter);
    doc.get("constants.C_steps", cfg.C_steps);
    doc.get("constants.C_chang", cfg.C_chang);
    doc.get("constants.K_entropy", cfg.K_entropy);
    doc.get("constants.tolerance", cfg.tolerance);
    doc.get("grids.lambda_points", cfg.lambda_points);
    doc.get("grids.eta_points", cfg.eta_points);
    auto it = doc.arrays.find("grids.dim_grid");
    if (it != doc.arrays.end()) cfg.dim_grid = it->second;
    doc.get("caps.size_cap", cfg.size_cap);
    doc.get("caps.brute_cap", cfg.brute_cap);
    doc.get("omega_trials", cfg.omega_trials);
    doc.get("seed", cfg.seed);
    cfg.validate();
    return cfg;
}

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw BadInput("cannot open config file: " + path);
    return load_config(is);
}

} // namespace bohrlab
