#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mxd/basis.hpp"
#include "mxd/design.hpp"

namespace mxd {

/// Configuration problems (bad file, unknown key, missing value). The CLI
/// maps these to exit code 2; numerical failures map to 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sectioned key = value text. '#' starts a comment. Keys are tracked on
/// access so unknown (misspelled) keys can be rejected after parsing.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& name = "<string>");

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key) const;
    std::int64_t get_int(const std::string& section, const std::string& key) const;
    bool get_bool(const std::string& section, const std::string& key) const;
    std::vector<double> get_double_list(const std::string& section, const std::string& key) const;
    std::vector<std::string> get_string_list(const std::string& section,
                                             const std::string& key) const;

    template <typename T>
    T get_or(const std::string& section, const std::string& key, T fallback) const;

    /// Throws ConfigError naming the first key that was never read.
    void reject_unknown_keys() const;

    /// FNV-1a of the raw text; embedded in output headers.
    std::uint64_t hash() const { return hash_; }
    const std::string& name() const { return name_; }

private:
    std::string name_;
    std::uint64_t hash_ = 0;
    std::map<std::string, std::map<std::string, std::string>> sections_;
    mutable std::set<std::string> consumed_;  // "section.key"

    const std::string& raw(const std::string& section, const std::string& key) const;
};

/// "inf" (any case) maps to +infinity; otherwise strtod with full-token check.
double parse_sigma2(const std::string& token);

/// Builders shared by the command line subcommands.
std::shared_ptr<const BasisContext> basis_from_config(const Config& cfg);
MeanFunction mean_from_config(const Config& cfg, const BasisContext& ctx);

/// Round-trip serialization back to config text. Monomial bases and the two
/// named weights only; polynomial means only (tabulated means have no text
/// form). Throws ConfigError otherwise.
std::string basis_to_config(const BasisContext& ctx);
std::string mean_to_config(const MeanFunction& m);

/// Reads a design table CSV (columns x,density[,cdf]; '#' comments allowed).
void load_design_table(const std::string& path, std::vector<double>& xs,
                       std::vector<double>& densities);

}  // namespace mxd
