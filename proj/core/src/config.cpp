#include "mxd/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <type_traits>

namespace mxd {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) {
        // allow comma separated lists too
        while (!tok.empty() && tok.back() == ',') tok.pop_back();
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

double parse_double_token(const std::string& tok, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: expected a number for " + what + ", got '" + tok + "'");
    }
}

}  // namespace

Config Config::parse_string(const std::string& text, const std::string& name) {
    Config cfg;
    cfg.name_ = name;
    cfg.hash_ = fnv1a(text);

    std::istringstream is(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(name + ":" + std::to_string(line_no) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError(name + ":" + std::to_string(line_no) + ": empty section name");
            cfg.sections_[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(name + ":" + std::to_string(line_no) + ": expected key = value");
        if (section.empty())
            throw ConfigError(name + ":" + std::to_string(line_no) + ": key before any [section]");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(name + ":" + std::to_string(line_no) + ": empty key");
        auto& sec = cfg.sections_[section];
        if (sec.count(key))
            throw ConfigError(name + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                              "' in section [" + section + "]");
        sec[key] = value;
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

bool Config::has(const std::string& section, const std::string& key) const {
    auto sit = sections_.find(section);
    return sit != sections_.end() && sit->second.count(key) > 0;
}

const std::string& Config::raw(const std::string& section, const std::string& key) const {
    auto sit = sections_.find(section);
    if (sit == sections_.end())
        throw ConfigError("config: missing section [" + section + "] in " + name_);
    auto kit = sit->second.find(key);
    if (kit == sit->second.end())
        throw ConfigError("config: missing key '" + key + "' in section [" + section + "]");
    consumed_.insert(section + "." + key);
    return kit->second;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
    return raw(section, key);
}

double Config::get_double(const std::string& section, const std::string& key) const {
    return parse_double_token(raw(section, key), "[" + section + "] " + key);
}

std::int64_t Config::get_int(const std::string& section, const std::string& key) const {
    const std::string& v = raw(section, key);
    try {
        std::size_t pos = 0;
        const long long n = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError("config: expected an integer for [" + section + "] " + key +
                          ", got '" + v + "'");
    }
}

bool Config::get_bool(const std::string& section, const std::string& key) const {
    std::string v = raw(section, key);
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: expected on/off for [" + section + "] " + key + ", got '" + v + "'");
}

std::vector<double> Config::get_double_list(const std::string& section,
                                            const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : split_tokens(raw(section, key)))
        out.push_back(parse_sigma2(tok));
    if (out.empty())
        throw ConfigError("config: empty list for [" + section + "] " + key);
    return out;
}

std::vector<std::string> Config::get_string_list(const std::string& section,
                                                 const std::string& key) const {
    auto out = split_tokens(raw(section, key));
    if (out.empty())
        throw ConfigError("config: empty list for [" + section + "] " + key);
    return out;
}

template <typename T>
T Config::get_or(const std::string& section, const std::string& key, T fallback) const {
    if (!has(section, key)) return fallback;
    if constexpr (std::is_same_v<T, std::string>)
        return get_string(section, key);
    else if constexpr (std::is_same_v<T, bool>)
        return get_bool(section, key);
    else if constexpr (std::is_same_v<T, double>)
        return get_double(section, key);
    else
        return static_cast<T>(get_int(section, key));
}

template std::string Config::get_or(const std::string&, const std::string&, std::string) const;
template bool Config::get_or(const std::string&, const std::string&, bool) const;
template double Config::get_or(const std::string&, const std::string&, double) const;
template int Config::get_or(const std::string&, const std::string&, int) const;
template std::int64_t Config::get_or(const std::string&, const std::string&, std::int64_t) const;

void Config::reject_unknown_keys() const {
    for (const auto& [section, kv] : sections_) {
        for (const auto& [key, value] : kv) {
            if (!consumed_.count(section + "." + key))
                throw ConfigError("config: unknown key '" + key + "' in section [" + section +
                                  "] of " + name_);
        }
    }
}

double parse_sigma2(const std::string& token) {
    std::string v = token;
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
    return parse_double_token(token, "value");
}

std::shared_ptr<const BasisContext> basis_from_config(const Config& cfg) {
    const std::string kind = cfg.get_or<std::string>("basis", "kind", "monomial");
    if (kind != "monomial")
        throw ConfigError("config: [basis] kind must be 'monomial' (explicit bases are API-only)");
    const int degree = static_cast<int>(cfg.get_int("basis", "degree"));
    Interval support{-1.0, 1.0};
    if (cfg.has("basis", "support")) {
        const auto v = cfg.get_double_list("basis", "support");
        if (v.size() != 2 || !(v[0] < v[1]) || !std::isfinite(v[0]) || !std::isfinite(v[1]))
            throw ConfigError("config: [basis] support must be two increasing finite numbers");
        support = {v[0], v[1]};
    }
    std::optional<WeightSpec> weight;
    if (cfg.has("basis", "weight")) {
        const auto toks = cfg.get_string_list("basis", "weight");
        if (toks[0] == "uniform" && toks.size() == 1) {
            weight = WeightSpec::uniform(support);
        } else if (toks[0] == "truncnormal" && toks.size() == 3) {
            weight = WeightSpec::truncated_normal(parse_sigma2(toks[1]), parse_sigma2(toks[2]),
                                                  support);
        } else {
            throw ConfigError(
                "config: [basis] weight must be 'uniform' or 'truncnormal <mean> <variance>'");
        }
    }
    const int nodes = cfg.get_or<int>("basis", "nodes", 512);
    try {
        return std::make_shared<const BasisContext>(
            build_basis_context(degree, support, std::move(weight), nodes));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

MeanFunction mean_from_config(const Config& cfg, const BasisContext& ctx) {
    const bool has_poly = cfg.has("mean", "poly");
    const bool has_calibrate = cfg.has("mean", "calibrate_base");
    if (has_poly == has_calibrate)
        throw ConfigError("config: [mean] needs exactly one of 'poly' or 'calibrate_*' keys");
    if (has_poly) {
        auto coeffs = cfg.get_double_list("mean", "poly");
        std::ostringstream d;
        d << "poly";
        for (double c : coeffs) d << ' ' << c;
        return MeanFunction::polynomial(std::move(coeffs), d.str());
    }
    const auto base = cfg.get_double_list("mean", "calibrate_base");
    const int degree = static_cast<int>(cfg.get_int("mean", "calibrate_degree"));
    const double target = cfg.get_or<double>("mean", "calibrate_target", 1.0);
    return calibrate_leading_coefficient(base, degree, ctx, target);
}

std::string basis_to_config(const BasisContext& ctx) {
    if (!ctx.monomial_degree())
        throw ConfigError("config: explicit function bases have no text form");
    const auto& wd = ctx.weight().description;
    if (wd != "uniform" && wd.rfind("truncnormal ", 0) != 0)
        throw ConfigError("config: weight '" + wd + "' has no text form");
    std::ostringstream os;
    os.precision(17);
    os << "[basis]\n";
    os << "kind = monomial\n";
    os << "degree = " << *ctx.monomial_degree() << '\n';
    os << "support = " << ctx.support().lo << ' ' << ctx.support().hi << '\n';
    os << "weight = " << wd << '\n';
    os << "nodes = " << ctx.quadrature_nodes() << '\n';
    return os.str();
}

std::string mean_to_config(const MeanFunction& m) {
    if (!m.is_polynomial())
        throw ConfigError("config: tabulated means have no text form");
    std::ostringstream os;
    os.precision(17);
    os << "[mean]\n";
    os << "poly =";
    for (double c : m.poly_coefficients()) os << ' ' << c;
    os << '\n';
    return os.str();
}

void load_design_table(const std::string& path, std::vector<double>& xs,
                       std::vector<double>& densities) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open design table '" + path + "'");
    xs.clear();
    densities.clear();
    std::string line;
    bool header_skipped = false;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double x, d;
        if (!(ls >> x >> d)) {
            if (!header_skipped) {
                header_skipped = true;  // tolerate one header row
                continue;
            }
            throw ConfigError("config: malformed design table row: '" + line + "'");
        }
        xs.push_back(x);
        densities.push_back(d);
    }
    if (xs.size() < 2) throw ConfigError("config: design table needs at least two rows");
}

}  // namespace mxd
