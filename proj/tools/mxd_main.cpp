// mxd: minimax random designs for weighted least squares under
// misspecification. Subcommands: design | risk | simulate | figures.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "mxd/config.hpp"
#include "mxd/design.hpp"
#include "mxd/risk.hpp"
#include "mxd/simulate.hpp"

namespace fs = std::filesystem;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
    bool quiet = false;
};

class OutputFile {
public:
    OutputFile(const CliOptions& opt, const mxd::Config& cfg, const std::string& name,
               const std::string& subcommand) {
        const fs::path path = fs::path(opt.out_dir) / name;
        os_.open(path);
        if (!os_) throw std::runtime_error("cannot write " + path.string());
        os_ << "# mxd " << subcommand << '\n';
        os_ << "# config = " << cfg.name() << '\n';
        os_ << "# config_hash = " << std::hex << cfg.hash() << std::dec << '\n';
        os_.precision(17);
    }
    std::ofstream& stream() { return os_; }

private:
    std::ofstream os_;
};

void note(const CliOptions& opt, const std::string& msg) {
    if (!opt.quiet) std::cout << msg << '\n';
}

void warn_condition(const CliOptions& opt, const mxd::BasisContext& ctx) {
    if (ctx.q_condition() > 1e10 && !opt.quiet)
        std::cerr << "warning: moment matrix condition number " << ctx.q_condition()
                  << " exceeds 1e10; results may lose digits\n";
}

std::string sigma2_label(double s2) {
    if (std::isinf(s2)) return "inf";
    std::ostringstream os;
    os << s2;
    return os.str();
}

// "minimax" or "minimax(2.5)" — a trailing parenthesis pins the design sigma2.
struct DesignToken {
    std::string name;
    std::optional<double> sigma2;
};

DesignToken parse_design_token(const std::string& token) {
    const auto open = token.find('(');
    if (open == std::string::npos) return {token, std::nullopt};
    if (token.back() != ')')
        throw mxd::ConfigError("config: malformed design token '" + token + "'");
    return {token.substr(0, open),
            mxd::parse_sigma2(token.substr(open + 1, token.size() - open - 2))};
}

mxd::DesignDensity design_by_name(const std::string& name,
                                  const std::shared_ptr<const mxd::BasisContext>& ctx,
                                  std::optional<double> sigma2,
                                  const std::optional<std::string>& table_path,
                                  int cdf_points) {
    mxd::DesignFamily family;
    try {
        family = mxd::parse_design_family(name);
    } catch (const std::invalid_argument& e) {
        throw mxd::ConfigError(std::string("config: ") + e.what());
    }
    if (family == mxd::DesignFamily::CustomTable) {
        if (!table_path)
            throw mxd::ConfigError("config: design family 'table' needs a table path");
        std::vector<double> xs, ds;
        mxd::load_design_table(*table_path, xs, ds);
        return mxd::design_from_table(ctx, std::move(xs), std::move(ds), cdf_points);
    }
    return mxd::build_design(ctx, family, sigma2, cdf_points);
}

int cmd_design(const CliOptions& opt) {
    const auto cfg = mxd::Config::parse_file(opt.config_path);
    auto ctx = mxd::basis_from_config(cfg);
    warn_condition(opt, *ctx);

    const std::string family_name = cfg.get_or<std::string>("design", "family", "minimax");
    std::optional<double> sigma2;
    if (cfg.has("design", "sigma2"))
        sigma2 = mxd::parse_sigma2(cfg.get_string("design", "sigma2"));
    const int cdf_points = cfg.get_or<int>("design", "cdf_points", 8192);
    std::optional<std::string> table_path;
    if (cfg.has("design", "table")) table_path = cfg.get_string("design", "table");
    std::vector<double> sigma2_list;
    if (cfg.has("design", "sigma2_list"))
        sigma2_list = cfg.get_double_list("design", "sigma2_list");
    cfg.reject_unknown_keys();

    const auto design = design_by_name(family_name, ctx, sigma2, table_path, cdf_points);
    {
        OutputFile f(opt, cfg, "design.csv", "design");
        design.export_csv(f.stream());
    }
    {
        OutputFile f(opt, cfg, "design.txt", "design");
        design.describe(f.stream());
    }
    if (!sigma2_list.empty()) {
        OutputFile f(opt, cfg, "design_curves.csv", "design");
        std::vector<mxd::DesignDensity> curves;
        f.stream() << "x";
        for (double s2 : sigma2_list) {
            curves.push_back(mxd::build_design(ctx, mxd::DesignFamily::Minimax, s2, cdf_points));
            f.stream() << ",pi_sigma2_" << sigma2_label(s2);
        }
        f.stream() << '\n';
        const auto s = ctx->support();
        const int grid = 401;
        for (int i = 0; i <= grid; ++i) {
            const double x = s.lo + s.length() * i / grid;
            f.stream() << x;
            for (const auto& c : curves) f.stream() << ',' << c.density_at(x);
            f.stream() << '\n';
        }
    }
    note(opt, "design written to " + opt.out_dir);
    return 0;
}

int cmd_risk(const CliOptions& opt) {
    const auto cfg = mxd::Config::parse_file(opt.config_path);
    auto ctx = mxd::basis_from_config(cfg);
    warn_condition(opt, *ctx);
    const auto mean = mxd::mean_from_config(cfg, *ctx);

    const auto design_names = cfg.get_string_list("risk", "designs");
    const auto sigma2_list = cfg.get_double_list("risk", "sigma2_list");
    const std::string noise_mode = cfg.get_or<std::string>("risk", "noise", "label");
    std::optional<std::string> table_path;
    if (cfg.has("risk", "table")) table_path = cfg.get_string("risk", "table");
    cfg.reject_unknown_keys();

    OutputFile sweep(opt, cfg, "risk.csv", "risk");
    sweep.stream() << "design,sigma2_label,noise_variance,variance_term,bias_term,"
                      "trace_risk,minimax_criterion,worst_case\n";

    for (double label : sigma2_list) {
        double noise;
        if (noise_mode == "label")
            noise = label;
        else if (noise_mode == "label-squared")
            noise = label * label;
        else
            noise = mxd::parse_sigma2(noise_mode);
        if (std::isinf(noise))
            throw mxd::ConfigError("config: noise variance must be finite in [risk]");

        for (const auto& token : design_names) {
            const auto parsed = parse_design_token(token);
            const auto design = design_by_name(parsed.name, ctx,
                                               parsed.sigma2 ? *parsed.sigma2 : label,
                                               table_path, 8192);
            const auto report = mxd::omega_trace(*ctx, design, mean, noise);
            sweep.stream() << parsed.name << ',' << sigma2_label(label) << ',' << noise
                           << ',' << report.variance_term << ',' << report.bias_term << ','
                           << report.trace_risk << ',' << report.minimax_criterion << ','
                           << report.worst_case << '\n';

            OutputFile kv(opt, cfg, "risk_" + parsed.name + "_" + sigma2_label(label) + ".txt",
                          "risk");
            report.write_keyvalue(kv.stream());
        }
    }
    note(opt, "risk sweep written to " + opt.out_dir);
    return 0;
}

mxd::SimConfig simulate_config(const CliOptions& opt, const mxd::Config& cfg,
                               const std::shared_ptr<const mxd::BasisContext>& ctx) {
    mxd::SimConfig sim;
    sim.ctx = ctx;
    sim.mean = mxd::mean_from_config(cfg, *ctx);
    sim.noise_variance = cfg.get_or<double>("simulate", "noise_variance", 1.0);
    sim.n = cfg.get_or<int>("simulate", "n", 50);
    sim.replications = cfg.get_or<int>("simulate", "replications", 10000);
    const auto file_seed =
        static_cast<std::uint64_t>(cfg.get_or<std::int64_t>("simulate", "seed", 1));
    sim.seed = opt.seed_override ? *opt.seed_override : file_seed;
    sim.coupled = cfg.get_or<bool>("simulate", "coupling", true);
    sim.workers = cfg.get_or<int>("simulate", "workers", 0);

    const double design_sigma2 =
        cfg.get_or<double>("simulate", "design_sigma2", sim.noise_variance);
    std::optional<std::string> table_path;
    if (cfg.has("simulate", "table")) table_path = cfg.get_string("simulate", "table");
    for (const auto& token : cfg.get_string_list("simulate", "designs")) {
        const auto parsed = parse_design_token(token);
        sim.designs.push_back(design_by_name(
            parsed.name, ctx, parsed.sigma2 ? *parsed.sigma2 : design_sigma2, table_path,
            8192));
        sim.design_labels.push_back(token);
    }
    return sim;
}

int cmd_simulate(const CliOptions& opt) {
    const auto cfg = mxd::Config::parse_file(opt.config_path);
    auto ctx = mxd::basis_from_config(cfg);
    warn_condition(opt, *ctx);
    auto sim = simulate_config(opt, cfg, ctx);

    std::vector<double> n_grid_d;
    if (cfg.has("simulate", "n_grid")) n_grid_d = cfg.get_double_list("simulate", "n_grid");
    const bool scale_reps = cfg.get_or<bool>("simulate", "scale_replications", false);
    cfg.reject_unknown_keys();

    const auto result = mxd::run_experiment(sim);
    {
        OutputFile f(opt, cfg, "simulation.csv", "simulate");
        f.stream() << "# seed = " << sim.seed << '\n';
        result.write_csv(f.stream());
    }
    {
        OutputFile f(opt, cfg, "table.txt", "simulate");
        f.stream() << "# seed = " << sim.seed << '\n';
        result.write_table(f.stream());
    }
    if (!result.differences.empty()) {
        OutputFile f(opt, cfg, "differences.csv", "simulate");
        f.stream() << "# seed = " << sim.seed << '\n';
        f.stream() << "first,second,mean_difference,standard_error\n";
        for (const auto& p : result.differences)
            f.stream() << result.design_labels[p.first] << ',' << result.design_labels[p.second]
                       << ',' << p.mean_difference << ',' << p.standard_error << '\n';
    }
    if (!n_grid_d.empty()) {
        std::vector<int> n_grid;
        for (double v : n_grid_d) n_grid.push_back(static_cast<int>(v));
        const auto points = mxd::convergence_study(sim, n_grid, scale_reps);
        OutputFile f(opt, cfg, "convergence.csv", "simulate");
        f.stream() << "# seed = " << sim.seed << '\n';
        f.stream() << "n,replications,mean_n_ise,standard_error,trace_risk,gap,scaled_gap\n";
        for (const auto& p : points)
            f.stream() << p.n << ',' << p.replications << ',' << p.empirical_mean << ','
                       << p.standard_error << ',' << p.trace_risk << ',' << p.gap << ','
                       << p.scaled_gap << '\n';
    }
    note(opt, "simulation written to " + opt.out_dir);
    return 0;
}

int cmd_figures(const CliOptions& opt) {
    const auto cfg = mxd::Config::parse_file(opt.config_path);
    const auto which = cfg.has("figures", "which")
                           ? cfg.get_string_list("figures", "which")
                           : std::vector<std::string>{"fig1", "fig2"};
    const int grid = cfg.get_or<int>("figures", "grid_points", 401);

    std::vector<double> fig1_mean{0.25, 0.5, 0.25};
    if (cfg.has("figures", "fig1_mean")) fig1_mean = cfg.get_double_list("figures", "fig1_mean");
    std::vector<std::string> fig1_pi{"truncnormal", "0.5", "0.25"};
    if (cfg.has("figures", "fig1_pi")) fig1_pi = cfg.get_string_list("figures", "fig1_pi");
    std::vector<double> fig2_degrees{1, 2};
    if (cfg.has("figures", "fig2_degrees"))
        fig2_degrees = cfg.get_double_list("figures", "fig2_degrees");
    std::vector<double> fig2_sigma2{2.0, 3.0, std::numeric_limits<double>::infinity()};
    if (cfg.has("figures", "fig2_sigma2_list"))
        fig2_sigma2 = cfg.get_double_list("figures", "fig2_sigma2_list");
    cfg.reject_unknown_keys();

    const mxd::Interval support{-1.0, 1.0};

    for (const auto& fig : which) {
        if (fig == "fig1") {
            auto ctx = std::make_shared<const mxd::BasisContext>(mxd::build_basis_context(1));
            const auto m = mxd::MeanFunction::polynomial(fig1_mean, "fig1 mean");
            if (fig1_pi.size() != 3 || fig1_pi[0] != "truncnormal")
                throw mxd::ConfigError(
                    "config: fig1_pi must be 'truncnormal <mean> <variance>'");
            const auto weight = mxd::WeightSpec::truncated_normal(
                mxd::parse_sigma2(fig1_pi[1]), mxd::parse_sigma2(fig1_pi[2]), support);

            // Tabulate the sampling density as a custom design for ell_pi.
            std::vector<double> xs(8193), ds(8193);
            for (int i = 0; i <= 8192; ++i) {
                xs[i] = -1.0 + 2.0 * i / 8192;
                ds[i] = weight.density(xs[i]);
            }
            const auto pi_design = mxd::design_from_table(ctx, xs, ds);
            const auto ell = mxd::best_linear_coefficients(m, *ctx);
            const auto ell_pi = mxd::best_linear_coefficients_under_design(m, pi_design, *ctx);

            OutputFile fa(opt, cfg, "fig1a.csv", "figures");
            fa.stream() << "x,m,ell,ell_pi\n";
            for (int i = 0; i <= grid; ++i) {
                const double x = -1.0 + 2.0 * i / grid;
                fa.stream() << x << ',' << m(x) << ',' << mxd::evaluate_linear(*ctx, ell, x)
                            << ',' << mxd::evaluate_linear(*ctx, ell_pi, x) << '\n';
            }
            OutputFile fb(opt, cfg, "fig1b.csv", "figures");
            fb.stream() << "x,uniform,pi\n";
            for (int i = 0; i <= grid; ++i) {
                const double x = -1.0 + 2.0 * i / grid;
                fb.stream() << x << ',' << 0.5 << ',' << weight.density(x) << '\n';
            }
        } else if (fig == "fig2") {
            for (double deg : fig2_degrees) {
                auto ctx = std::make_shared<const mxd::BasisContext>(
                    mxd::build_basis_context(static_cast<int>(deg)));
                std::vector<mxd::DesignDensity> curves;
                std::vector<std::string> labels;
                curves.push_back(mxd::build_design(ctx, mxd::DesignFamily::PropH));
                labels.push_back("pi_low_sigma2");  // the sigma2 <= sigma2_min regime
                for (double s2 : fig2_sigma2) {
                    curves.push_back(mxd::build_design(ctx, mxd::DesignFamily::Minimax, s2));
                    labels.push_back("pi_sigma2_" + sigma2_label(s2));
                }
                std::ostringstream name;
                name << "fig2_k" << static_cast<int>(deg) << ".csv";
                OutputFile f(opt, cfg, name.str(), "figures");
                f.stream() << "x";
                for (const auto& l : labels) f.stream() << ',' << l;
                f.stream() << '\n';
                for (int i = 0; i <= grid; ++i) {
                    const double x = -1.0 + 2.0 * i / grid;
                    f.stream() << x;
                    for (const auto& c : curves) f.stream() << ',' << c.density_at(x);
                    f.stream() << '\n';
                }
            }
        } else {
            throw mxd::ConfigError("config: unknown figure '" + fig + "' (use fig1, fig2)");
        }
    }
    note(opt, "figure data written to " + opt.out_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"minimax random designs for weighted least squares"};
    app.require_subcommand(1);

    CliOptions opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "configuration file")->required();
        sub->add_option("--out", opt.out_dir, "output directory")->required();
        sub->add_option("--seed", opt.seed_override, "seed override");
        sub->add_flag("--quiet", opt.quiet, "suppress progress output");
    };
    auto* design = app.add_subcommand("design", "construct a design density");
    auto* risk = app.add_subcommand("risk", "evaluate asymptotic risks");
    auto* simulate = app.add_subcommand("simulate", "run Monte Carlo experiments");
    auto* figures = app.add_subcommand("figures", "emit plot-ready curve data");
    for (auto* sub : {design, risk, simulate, figures}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        std::error_code ec;
        fs::create_directories(opt.out_dir, ec);
        if (ec || !fs::is_directory(opt.out_dir)) {
            std::cerr << "error: cannot create output directory '" << opt.out_dir << "'\n";
            return 2;
        }
        if (design->parsed()) return cmd_design(opt);
        if (risk->parsed()) return cmd_risk(opt);
        if (simulate->parsed()) return cmd_simulate(opt);
        if (figures->parsed()) return cmd_figures(opt);
        return 2;
    } catch (const mxd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
