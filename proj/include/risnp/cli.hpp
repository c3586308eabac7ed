// SPDX-License-Identifier: Apache-2.0
//
// risnp: blockage-aware RIS-aided mmWave MIMO simulation and optimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef RISNP_CLI_HPP
#define RISNP_CLI_HPP

#include "io.hpp"
#include "montecarlo.hpp"
#include "selftest.hpp"

#include <CLI11/CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace risnp
{
    inline constexpr const char *out_dir_env = "RISNP_OUT_DIR";

    inline const std::vector<std::string> &cli_verbs()
    {
        static const std::vector<std::string> verbs = {"roc", "outage", "rate", "converge", "sweep", "selftest"};
        return verbs;
    }

    // Parsed command line.
    struct Command
    {
        std::string verb;
        std::string config_path;  // empty = built-in defaults
        std::string out_dir;
        std::optional<std::uint64_t> seed;
        std::optional<int> trials;
        int threads = 0;
        std::vector<double> snr_db;
        std::string param;
        std::vector<double> grid;
        std::string policy = "both";
        std::string mode = "all";
        std::string kind = "outage";
    };

    namespace detail
    {
        inline constexpr int default_converge_iterations = 1000;
        inline constexpr int roc_points = 201;

        inline std::vector<Cell> metric_cells(double value, const std::vector<std::pair<std::string, double>> &m)
        {
            std::vector<Cell> row{value};
            for (const auto &kv : m)
                row.emplace_back(kv.second);
            return row;
        }

        inline ResultBundle run_roc(const Command &cmd, const ScenarioConfig &cfg)
        {
            const std::vector<double> snrs = cmd.snr_db.empty() ? std::vector<double>{cfg.snr_db} : cmd.snr_db;
            const auto sc = detection_scenario(cfg);
            const auto curves = roc_sweep(sc, snrs, roc_points, cfg.n_trials, cfg.rng_seed);
            ResultBundle b{"roc", {"snr_db", "p_fa", "p_d"}, {}, nlohmann::json::object()};
            nlohmann::json per_snr = nlohmann::json::array();
            for (const auto &c : curves)
            {
                for (const auto &p : c.points)
                    b.add_row({c.snr_db, p.p_fa, p.p_d});
                per_snr.push_back({{"snr_db", c.snr_db},
                                   {"p_d_at_alpha", pd_at_pfa(c.points, cfg.alpha)},
                                   {"p_fa_at_p_d_0.9", pfa_at_pd(c.points, 0.9)}});
            }
            b.summary["curves"] = per_snr;
            const auto model = threshold_for_alpha(
                calibrate_densities(sc, cfg.snr_db, cfg.calib_trials, derive_seed(cfg.rng_seed, 0xD37EC7)), cfg.alpha);
            b.summary["detector"] = model.to_json();
            return b;
        }

        inline ResultBundle run_outage(const Command &cmd, const ScenarioConfig &cfg)
        {
            std::vector<BeamPolicy> policies;
            if (cmd.policy == "both")
                policies = {BeamPolicy::fixed, BeamPolicy::adaptive};
            else
                policies = {parse_policy(cmd.policy)};
            ResultBundle b{"outage",
                           {"policy", "active_elements", "beamwidth_rad", "outage", "ci95_lo", "ci95_hi", "mean_rate",
                            "served_fraction", "trials"},
                           {},
                           nlohmann::json::object()};
            for (auto p : policies)
            {
                const auto e = estimate_outage(cfg, p, cfg.rng_seed, cmd.threads);
                b.add_row({to_string(p), std::int64_t{e.active_elements}, e.beamwidth, e.probability, e.ci95_lo,
                           e.ci95_hi, e.mean_rate, e.served_fraction, std::int64_t{e.trials}});
            }
            return b;
        }

        inline ResultBundle run_rate(const Command &cmd, const ScenarioConfig &cfg)
        {
            std::vector<ScenarioMode> modes;
            if (cmd.mode == "all")
                modes = {ScenarioMode::no_ris, ScenarioMode::ris_oracle, ScenarioMode::ris_np};
            else
                modes = {parse_mode(cmd.mode)};
            ResultBundle b{"rate", {"mode"}, {}, nlohmann::json::object()};
            for (const auto &kv : scenario_metrics(ScenarioMetrics{}))
                b.columns.push_back(kv.first);
            nlohmann::json users = nlohmann::json::object();
            for (auto m : modes)
            {
                const auto r = run_scenario(cfg, m, cmd.threads);
                std::vector<Cell> row{to_string(m)};
                for (const auto &kv : scenario_metrics(r))
                    row.emplace_back(kv.second);
                b.add_row(std::move(row));
                users[to_string(m)] = r.user_rates;
            }
            b.summary["user_rates"] = users;
            return b;
        }

        inline ResultBundle run_converge(const Command &cmd, const ScenarioConfig &cfg)
        {
            const int iterations = cmd.trials.value_or(default_converge_iterations);
            require(iterations >= 1, "--trials must be positive");
            const auto [rows, cols] = subarray_shape(cfg.ris_rows, cfg.ris_cols, cfg.active_ris_elements);
            const auto ris = ArrayGeometry::ura(rows, cols);

            // One blocked user served through the RIS.
            Rng rng(derive_seed(cfg.rng_seed, 0xC0E7ULL));
            auto layout = scenario_layout(cfg, ris);
            layout.direct_aod = {uniform(rng, pi / 6.0, 5.0 * pi / 6.0), 0.0};
            layout.ris_to_ms = {uniform(rng, pi / 6.0, 5.0 * pi / 6.0), 0.0};
            layout.epsilon = 0.0;
            const auto real = draw_realization(layout, rng);
            const auto p =
                normalized_problem(RateProblem::from_realization(real, scenario_budget(cfg), cfg.omega_tot, false));
            const auto start = initial_state(p, rng);

            OptimizerConfig oc;
            oc.max_iterations = iterations;
            const auto accelerated = pgd_optimize(p, start, {}, oc);
            oc.momentum = false;
            const auto plain = pgd_optimize(p, start, {}, oc);
            const auto ao = ao_baseline(p, start, iterations);

            ResultBundle b{"converge",
                           {"algorithm", "iteration", "rate", "grad_norm_theta", "grad_norm_gain", "step_theta",
                            "step_gain"},
                           {},
                           nlohmann::json::object()};
            for (const auto &[name, res] : {std::pair<std::string, const OptimizeResult &>{"pgd-momentum", accelerated},
                                            {"pgd", plain},
                                            {"ao", ao}})
            {
                b.add_row({name, std::int64_t{0}, res.initial_rate, 0.0, 0.0, 0.0, 0.0});
                for (const auto &r : res.trace.records)
                    b.add_row({name, std::int64_t{r.iteration}, r.rate, r.grad_norm_theta, r.grad_norm_gain,
                               r.step_theta, r.step_gain});
                b.summary[name] = {{"final_rate", res.rate},
                                   {"iterations", res.iterations},
                                   {"converged", res.converged},
                                   {"iterations_to_90pct", res.trace.iterations_to_fraction(0.9, res.initial_rate)}};
            }
            b.summary["active_elements"] = rows * cols;
            return b;
        }

        inline ResultBundle run_sweep(const Command &cmd, const ScenarioConfig &cfg)
        {
            require(!cmd.param.empty(), "sweep needs --param");
            SweepSpec spec;
            if (cmd.kind == "scenario")
                spec.kind = SweepKind::scenario;
            else
                require(cmd.kind == "outage", "unknown sweep kind '" + cmd.kind + "' (expected outage or scenario)");
            if (cmd.policy != "both")
                spec.policy = parse_policy(cmd.policy);
            if (cmd.mode != "all")
                spec.mode = parse_mode(cmd.mode);
            const auto rows = param_sweep(cfg, cmd.param, cmd.grid, spec, cmd.threads);

            ResultBundle b{"sweep", {cmd.param}, {}, nlohmann::json::object()};
            const auto names = spec.kind == SweepKind::outage ? outage_metrics(OutageEstimate{})
                                                              : scenario_metrics(ScenarioMetrics{});
            for (const auto &kv : names)
                b.columns.push_back(kv.first);
            for (const auto &r : rows)
                b.add_row(metric_cells(r.value, r.metrics));
            b.summary["kind"] = cmd.kind;
            b.summary["policy"] = to_string(spec.policy);
            b.summary["mode"] = to_string(spec.mode);
            return b;
        }

        inline ResultBundle run_selftest_verb(const ScenarioConfig &cfg, std::ostream &out)
        {
            ResultBundle b{"selftest", {"check", "passed", "detail"}, {}, nlohmann::json::object()};
            bool all = true;
            for (const auto &r : run_selftest(cfg.rng_seed))
            {
                out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
                b.add_row({r.name, std::int64_t{r.passed}, r.detail});
                all &= r.passed;
            }
            b.summary["passed"] = all;
            return b;
        }

        // Applies the trial override to the count the verb consumes.
        inline void apply_trials(const Command &cmd, ScenarioConfig &cfg)
        {
            if (!cmd.trials)
                return;
            const bool scenario = cmd.verb == "rate" || (cmd.verb == "sweep" && cmd.kind == "scenario");
            if (scenario)
                cfg.scenario_trials = *cmd.trials;
            else if (cmd.verb != "converge")
                cfg.n_trials = *cmd.trials;
        }
    } // namespace detail

    inline std::string cli_usage()
    {
        return "usage: risnp <verb> [options]\n"
               "verbs:\n"
               "  roc       detector ROC curves (--snr)\n"
               "  outage    blocked-user outage for fixed and adaptive beams (--policy)\n"
               "  rate      multi-user sum rate per routing mode (--mode)\n"
               "  converge  optimizer convergence traces (--trials sets the iteration cap)\n"
               "  sweep     one config key over a grid (--param, --grid, --kind)\n"
               "  selftest  quick built-in checks\n"
               "run 'risnp --help' for the option list\n";
    }

    // Loads the config, runs the verb and writes <out>/<verb>.csv and .json.
    inline int run_command(const Command &cmd, std::ostream &out, std::ostream &err)
    {
        ScenarioConfig cfg;
        if (!cmd.config_path.empty())
            cfg = load_config(cmd.config_path);
        if (cmd.seed)
            cfg.rng_seed = *cmd.seed;
        detail::apply_trials(cmd, cfg);
        cfg.validate();

        ResultBundle bundle;
        bool ok = true;
        if (cmd.verb == "roc")
            bundle = detail::run_roc(cmd, cfg);
        else if (cmd.verb == "outage")
            bundle = detail::run_outage(cmd, cfg);
        else if (cmd.verb == "rate")
            bundle = detail::run_rate(cmd, cfg);
        else if (cmd.verb == "converge")
            bundle = detail::run_converge(cmd, cfg);
        else if (cmd.verb == "sweep")
            bundle = detail::run_sweep(cmd, cfg);
        else
        {
            bundle = detail::run_selftest_verb(cfg, out);
            ok = bundle.summary["passed"].get<bool>();
        }

        const std::filesystem::path dir = cmd.out_dir.empty() ? "." : cmd.out_dir;
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec)
            throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
        const RunInfo run{cmd.verb, cfg.rng_seed, cfg};
        for (auto [format, ext] : {std::pair{OutputFormat::csv, ".csv"}, std::pair{OutputFormat::json, ".json"}})
        {
            const auto path = dir / (cmd.verb + ext);
            emit_results(bundle, format, path, run);
            out << "wrote " << path.string() << '\n';
        }
        if (!ok)
            err << "risnp: selftest failed\n";
        return ok ? 0 : 1;
    }

    // Full command-line entry point; returns the process exit status.
    inline int run_cli(int argc, const char *const *argv, std::ostream &out = std::cout, std::ostream &err = std::cerr)
    {
        CLI::App app{"Blockage-aware RIS-aided mmWave MIMO simulation", "risnp"};
        Command cmd;
        if (const char *env = std::getenv(out_dir_env))
            cmd.out_dir = env;
        std::uint64_t seed = 0;
        int trials = 0;

        app.add_option("verb", cmd.verb, "roc | outage | rate | converge | sweep | selftest");
        app.add_option("--config", cmd.config_path, "scenario file of key = value lines");
        app.add_option("--out", cmd.out_dir, std::string("output directory (default $") + out_dir_env + " or .)");
        auto *seed_opt = app.add_option("--seed", seed, "override rng_seed");
        auto *trials_opt = app.add_option("--trials", trials, "override the trial count of the verb")
                               ->check(CLI::PositiveNumber);
        app.add_option("--threads", cmd.threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
        app.add_option("--snr", cmd.snr_db, "comma-separated SNR list in dB (roc)")->delimiter(',');
        app.add_option("--param", cmd.param, "config key to sweep (sweep)");
        app.add_option("--grid", cmd.grid, "comma-separated values (sweep)")->delimiter(',');
        app.add_option("--policy", cmd.policy, "fixed | adaptive | both (outage, sweep)");
        app.add_option("--mode", cmd.mode,
                       "no-ris | ris-oracle-detection | ris-np-detection | all (rate, sweep)");
        app.add_option("--kind", cmd.kind, "outage | scenario (sweep)");

        try
        {
            app.parse(argc, argv);
        }
        catch (const CLI::CallForHelp &e)
        {
            out << app.help() << '\n' << cli_usage();
            return 0;
        }
        catch (const CLI::ParseError &e)
        {
            err << "risnp: " << e.what() << '\n' << cli_usage();
            return 2;
        }
        const auto &verbs = cli_verbs();
        if (std::find(verbs.begin(), verbs.end(), cmd.verb) == verbs.end())
        {
            if (!cmd.verb.empty())
                err << "risnp: unknown verb '" << cmd.verb << "'\n";
            err << cli_usage();
            return 2;
        }
        if (*seed_opt)
            cmd.seed = seed;
        if (*trials_opt)
            cmd.trials = trials;

        try
        {
            return run_command(cmd, out, err);
        }
        catch (const std::exception &e)
        {
            err << "risnp: error: " << e.what() << '\n';
            return 1;
        }
    }
} // namespace risnp

#endif
