#pragma once

// Plumbing: kernel snapshot CSV, flat key=value scenario configs, and
// deterministic CSV emission (%.17g everywhere, config hash in headers).

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kernel.hpp"
#include "profiles.hpp"

namespace semilab {

/// Configuration / usage problems map to process exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Complex entry in the `re+imj` snapshot format, e.g. `1.5-0.25j`.
inline std::string fmt_complex(cplx v) {
    std::string s = fmt_double(v.real());
    const std::string im = fmt_double(v.imag());
    if (im[0] != '-') s += '+';
    s += im;
    s += 'j';
    return s;
}

inline cplx parse_complex(const std::string& tok) {
    if (tok.empty() || tok.back() != 'j')
        throw ConfigError("snapshot entry '" + tok + "' is not re+imj");
    // split at the sign that starts the imaginary part (skip position 0 and
    // exponent signs).
    size_t split = std::string::npos;
    for (size_t i = 1; i + 1 < tok.size(); ++i) {
        if ((tok[i] == '+' || tok[i] == '-') && tok[i - 1] != 'e' && tok[i - 1] != 'E')
            split = i; // keep the last such sign
    }
    if (split == std::string::npos)
        throw ConfigError("snapshot entry '" + tok + "' is not re+imj");
    try {
        size_t used = 0;
        const double re = std::stod(tok.substr(0, split), &used);
        if (used != split) throw ConfigError("snapshot entry '" + tok + "' is not re+imj");
        const std::string ims = tok.substr(split, tok.size() - 1 - split);
        const double im = std::stod(ims, &used);
        if (used != ims.size()) throw ConfigError("snapshot entry '" + tok + "' is not re+imj");
        return {re, im};
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("snapshot entry '" + tok + "' is not re+imj");
    }
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace detail

/// First line `# grid h=<h> n=<n>`, then n rows of n `re+imj` entries.
inline void write_kernel_snapshot(const std::string& path, const KernelOperator& w) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "# grid h=" << detail::fmt_double(w.grid.h) << " n=" << w.grid.n << "\n";
    for (int i = 0; i < w.grid.n; ++i) {
        for (int j = 0; j < w.grid.n; ++j) {
            if (j) out << ',';
            out << detail::fmt_complex(w.k(i, j));
        }
        out << '\n';
    }
}

inline KernelOperator read_kernel_snapshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string header;
    std::getline(in, header);
    double h = 0;
    int n = 0;
    if (std::sscanf(header.c_str(), "# grid h=%lf n=%d", &h, &n) != 2)
        throw ConfigError("snapshot header malformed: '" + header + "'");
    const Grid grid{h, n};
    ComplexMatrix m(n);
    std::string line;
    for (int i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw ConfigError("snapshot truncated at row " + std::to_string(i));
        std::stringstream ss(line);
        std::string tok;
        for (int j = 0; j < n; ++j) {
            if (!std::getline(ss, tok, ','))
                throw ConfigError("snapshot row " + std::to_string(i) + " too short");
            m(i, j) = detail::parse_complex(detail::trim(tok));
        }
    }
    return KernelOperator(grid, std::move(m));
}

/// Flat `key = value` lines; `#` starts a comment; blank lines ignored.
inline std::map<std::string, std::string> parse_config_text(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        kv[key] = val;
    }
    return kv;
}

inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse_config_text(in);
}

/// FNV-1a over the sorted, canonicalized key=value pairs.
inline uint64_t config_hash(const std::map<std::string, std::string>& kv) {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto eat = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& [k, v] : kv) {
        eat(k);
        eat("=");
        eat(v);
        eat("\n");
    }
    return h;
}

struct ScenarioConfig {
    std::string model = "shift"; // shift | diffusion
    double h = 1.0 / 64;
    double x_max = 8.0;
    std::string omega_profile = "exp"; // exp | x_exp | x2_exp | mixture
    double omega_alpha = 1.0;
    std::string state_profile = "exp"; // exp | x_exp | x2_exp | mixture
    double state_alpha = 1.0;
    double T = 1.0;
    double dt = 1.0 / 64;
    double tol = 1e-10;
    int max_iter = 200;
    bool fast_path = true;
    std::string flux_stencil = "second"; // second | first
    uint64_t seed = 20240901;
    std::string out_dir = ".";
    bool snapshots = false;

    uint64_t hash = 0; // of the raw key=value map

    static ScenarioConfig from_map(std::map<std::string, std::string> kv) {
        ScenarioConfig c;
        {
            // The output directory never influences file contents.
            auto hashed = kv;
            hashed.erase("out");
            c.hash = config_hash(hashed);
        }
        auto take = [&](const char* key) {
            auto it = kv.find(key);
            if (it == kv.end()) return std::string();
            std::string v = it->second;
            kv.erase(it);
            return v;
        };
        auto num = [&](const char* key, double& slot, bool positive = true) {
            const std::string v = take(key);
            if (v.empty()) return;
            try {
                size_t used = 0;
                slot = std::stod(v, &used);
                if (used != v.size()) throw std::invalid_argument(v);
            } catch (const std::exception&) {
                throw ConfigError(std::string("config key '") + key + "': bad number '" + v + "'");
            }
            if (positive && !(slot > 0))
                throw ConfigError(std::string("config key '") + key + "' must be positive");
        };
        auto boolean = [&](const char* key, bool& slot) {
            const std::string v = take(key);
            if (v.empty()) return;
            if (v == "true" || v == "1")
                slot = true;
            else if (v == "false" || v == "0")
                slot = false;
            else
                throw ConfigError(std::string("config key '") + key + "': bad bool '" + v + "'");
        };

        if (std::string v = take("model"); !v.empty()) c.model = v;
        if (c.model != "shift" && c.model != "diffusion")
            throw ConfigError("config key 'model' must be shift or diffusion");
        if (c.model == "diffusion") {
            // Quartic boundary behavior by default: a rebound state with
            // omega(0,0) != 0 has a sqrt(t)-singular escape flux, and even a
            // quadratic diagonal (x_exp) starts with flux ~ sqrt(t), which
            // the trapezoid time quadrature integrates poorly. x^2 e^{-2x}
            // gives flux ~ t^{3/2} and stays well inside x_max.
            c.omega_profile = "x2_exp";
            c.state_profile = "x2_exp";
            c.omega_alpha = 2.0;
            c.state_alpha = 2.0;
        }
        num("h", c.h);
        num("x_max", c.x_max);
        if (std::string v = take("omega"); !v.empty()) c.omega_profile = v;
        num("omega_alpha", c.omega_alpha);
        if (std::string v = take("state"); !v.empty()) c.state_profile = v;
        num("state_alpha", c.state_alpha);
        num("T", c.T, /*positive=*/false);
        if (c.T < 0) throw ConfigError("config key 'T' must be >= 0");
        num("dt", c.dt);
        num("tol", c.tol);
        double mi = c.max_iter;
        num("max_iter", mi);
        c.max_iter = static_cast<int>(mi);
        if (c.max_iter < 1) throw ConfigError("config key 'max_iter' must be >= 1");
        boolean("fast_path", c.fast_path);
        boolean("snapshots", c.snapshots);
        if (std::string v = take("flux_stencil"); !v.empty()) c.flux_stencil = v;
        if (c.flux_stencil != "second" && c.flux_stencil != "first")
            throw ConfigError("config key 'flux_stencil' must be second or first");
        if (std::string v = take("seed"); !v.empty()) {
            try {
                size_t used = 0;
                c.seed = std::stoull(v, &used);
                if (used != v.size()) throw std::invalid_argument(v);
            } catch (const std::exception&) {
                throw ConfigError("config key 'seed': bad integer '" + v + "'");
            }
        }
        if (std::string v = take("out"); !v.empty()) c.out_dir = v;

        for (const std::string& name : {c.omega_profile, c.state_profile})
            if (name != "exp" && name != "x_exp" && name != "x2_exp" && name != "mixture")
                throw ConfigError("unknown profile '" + name + "'");
        if (c.x_max / c.h < 8) throw ConfigError("grid too small: need x_max/h >= 8");
        if (!kv.empty()) throw ConfigError("unknown config key '" + kv.begin()->first + "'");
        return c;
    }

    Grid make_grid() const { return Grid::from_extent(h, x_max); }

    DensityKernel make_density(const std::string& profile, double alpha) const {
        const Grid g = make_grid();
        if (profile == "mixture") {
            std::vector<std::pair<double, DensityKernel>> parts;
            parts.emplace_back(0.5, density_rank_one(profile_function(g, "x_exp", alpha)));
            parts.emplace_back(0.5, density_rank_one(profile_function(g, "x2_exp", alpha)));
            return density_mixture(parts);
        }
        return density_rank_one(profile_function(g, profile, alpha));
    }

    DensityKernel make_omega() const { return make_density(omega_profile, omega_alpha); }
    DensityKernel make_state() const { return make_density(state_profile, state_alpha); }
};

/// Deterministic CSV writer: `# config_hash=<hex> h=<h> n=<n>` header line,
/// then a column-name line, then %.17g rows.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const ScenarioConfig& cfg, const Grid& grid,
              const std::vector<std::string>& columns)
        : out_(path) {
        if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
        char hex[32];
        std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(cfg.hash));
        out_ << "# config_hash=" << hex << " h=" << detail::fmt_double(grid.h) << " n=" << grid.n
             << "\n";
        for (size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
        out_ << '\n';
    }

    /// One row; strings pass through, doubles use %.17g.
    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    static std::string cell(double v) { return detail::fmt_double(v); }

private:
    std::ofstream out_;
};

} // namespace semilab
