// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Oracles here are written independently of the library code they
// check (log-det rate, central differences, plain projected gradient).

#include <risnp/risnp.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace risnp;
namespace fs = std::filesystem;

namespace
{
    struct Outcome
    {
        bool passed = false;
        std::string detail;
    };

    std::string fmt(const char *f, auto... args)
    {
        char buf[512];
        std::snprintf(buf, sizeof buf, f, args...);
        return buf;
    }

    CMatrix random_matrix(Rng &rng, Eigen::Index rows, Eigen::Index cols, double var = 1.0)
    {
        CMatrix m(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r)
                m(r, c) = complex_gaussian(rng, var);
        return m;
    }

    CMatrix hermitian(const CMatrix &m) { return 0.5 * (m + m.adjoint()); }

    // Desk-scale instance: weak direct link plus a 16-element cascade.
    RateProblem desk_problem(std::uint64_t seed, int nk)
    {
        Rng rng(seed);
        RateProblem p;
        p.direct = 0.3 * random_matrix(rng, 2, 4);
        p.ris_ms = random_matrix(rng, 2, nk, 1.0 / nk);
        p.bs_ris = random_matrix(rng, nk, 4);
        p.j0 = 1.0;
        p.budget = 2.0;
        return p;
    }

    // ------------------------------------------------------------------------
    // 1. ROC improvement with SNR

    Outcome roc_improvement()
    {
        ScenarioConfig cfg;
        cfg.ris_rows = 8;
        cfg.ris_cols = 8;
        cfg.active_ris_elements = 64;
        const auto sc = detection_scenario(cfg);
        const auto curves = roc_sweep(sc, {2.0, 10.0}, 0, 10000, 101);
        const double pfa_lo = pfa_at_pd(curves[0].points, 0.9), pfa_hi = pfa_at_pd(curves[1].points, 0.9);
        double shortfall = 0.0;
        for (int k = 0; k <= 1000; ++k)
        {
            const double pfa = k / 1000.0;
            shortfall = std::max(shortfall, pd_at_pfa(curves[0].points, pfa) - pd_at_pfa(curves[1].points, pfa));
        }
        const bool ok = pfa_hi <= pfa_lo / 10.0 && shortfall <= 0.03;
        return {ok, fmt("P_FA at P_D=0.9: %.4f (2 dB) vs %.4f (10 dB); worst ROC shortfall %.4f", pfa_lo, pfa_hi,
                        shortfall)};
    }

    // ------------------------------------------------------------------------
    // 2. Detector calibration

    Outcome calibration()
    {
        ScenarioConfig cfg;
        const auto sc = detection_scenario(cfg);
        const auto base = calibrate_densities(sc, cfg.snr_db, 10000, 201);
        const auto held_out = run_detection_trials(sc, cfg.snr_db, false, 10000, 202);
        bool ok = true;
        std::string detail;
        for (double alpha : {0.01, 0.05, 0.1})
        {
            const auto model = threshold_for_alpha(base, alpha);
            int alarms = 0;
            for (const auto &t : held_out)
                alarms += acts_as_nlos(lrt_decide_estimates(t.per_sample, model).decision);
            const double pfa = alarms / 10000.0;
            ok &= std::abs(pfa - alpha) <= 0.02;
            detail += fmt("%salpha %.2f -> %.4f", detail.empty() ? "" : ", ", alpha, pfa);
        }
        return {ok, "held-out P_FA " + detail};
    }

    // ------------------------------------------------------------------------
    // 3. Gradient oracle

    double oracle_rate(const RateProblem &p, const CVector &theta, const CMatrix &g)
    {
        const CMatrix h = p.direct + p.ris_ms * theta.asDiagonal() * p.bs_ris;
        const CMatrix a = CMatrix::Identity(h.rows(), h.rows()) + h * g * h.adjoint() / p.j0;
        return std::log2(std::abs(a.determinant()));
    }

    // d f / d conj(z) = (df/dx + j df/dy) / 2 by central differences.
    template <class M>
    M central_difference(const std::function<double(const M &)> &f, const M &z, double h)
    {
        M grad(z.rows(), z.cols());
        for (Eigen::Index i = 0; i < z.size(); ++i)
        {
            M p = z, m = z;
            p.data()[i] += h;
            m.data()[i] -= h;
            const double dx = (f(p) - f(m)) / (2.0 * h);
            p = z, m = z;
            p.data()[i] += cdouble(0.0, h);
            m.data()[i] -= cdouble(0.0, h);
            const double dy = (f(p) - f(m)) / (2.0 * h);
            grad.data()[i] = 0.5 * cdouble(dx, dy);
        }
        return grad;
    }

    Outcome gradient_oracle()
    {
        double worst = 0.0;
        for (int t = 0; t < 20; ++t)
        {
            const int nk = 8 + t % 9;
            const auto p = desk_problem(derive_seed(301, t), nk);
            Rng rng(derive_seed(302, t));
            CVector theta(nk);
            for (int k = 0; k < nk; ++k)
                theta(k) = std::polar(1.0, uniform(rng, -pi, pi));
            const CMatrix f = random_matrix(rng, 4, 4);
            const CMatrix g = f * f.adjoint() * (p.budget / (f * f.adjoint()).trace().real());

            const auto an = rate_gradients(p, theta, g);
            const CVector fd_t = central_difference<CVector>([&](const CVector &th) { return oracle_rate(p, th, g); },
                                                              theta, 1e-6);
            const CMatrix fd_g =
                central_difference<CMatrix>([&](const CMatrix &gg) { return oracle_rate(p, theta, gg); }, g, 1e-6);
            worst = std::max(worst, (an.theta - fd_t).cwiseAbs().maxCoeff() / fd_t.cwiseAbs().maxCoeff());
            worst = std::max(worst, (an.gain - fd_g).cwiseAbs().maxCoeff() / fd_g.cwiseAbs().maxCoeff());
        }
        return {worst <= 1e-5, fmt("max relative error %.3g over 20 points", worst)};
    }

    // ------------------------------------------------------------------------
    // 4. Projection properties

    Outcome projections()
    {
        Rng rng(401);
        const double budget = 1.7;
        double idem = 0.0, modulus = 0.0, trace_excess = -1e300, min_eig = 1e300, expansion = -1e300;
        for (int i = 0; i < 100; ++i)
        {
            // Unit-modulus set; nonexpansive for inputs outside the unit disk,
            // where the nearest-point map is 1-Lipschitz.
            CVector x = random_matrix(rng, 32, 1).col(0), y = random_matrix(rng, 32, 1).col(0);
            for (Eigen::Index k = 0; k < x.size(); ++k)
            {
                x(k) *= (1.0 + std::abs(x(k))) / std::abs(x(k));
                y(k) *= (1.0 + std::abs(y(k))) / std::abs(y(k));
            }
            const CVector px = project_phase(x), py = project_phase(y);
            idem = std::max(idem, (project_phase(px) - px).cwiseAbs().maxCoeff());
            modulus = std::max(modulus, (px.cwiseAbs().array() - 1.0).abs().maxCoeff());
            expansion = std::max(expansion, (px - py).norm() - (x - y).norm());

            // Gain set {G Hermitian PSD, tr G <= budget}, convex.
            const CMatrix a = hermitian(random_matrix(rng, 6, 6, 2.0)), b = hermitian(random_matrix(rng, 6, 6, 2.0));
            const CMatrix pa = project_gain(a, budget), pb = project_gain(b, budget);
            idem = std::max(idem, (project_gain(pa, budget) - pa).cwiseAbs().maxCoeff());
            trace_excess = std::max(trace_excess, pa.trace().real() - budget);
            Eigen::SelfAdjointEigenSolver<CMatrix> es(pa);
            min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
            expansion = std::max(expansion, (pa - pb).norm() - (a - b).norm());
        }
        const bool ok = idem <= 1e-12 && modulus <= 1e-12 && trace_excess <= 1e-9 && min_eig >= -1e-9 &&
                        expansion <= 1e-9;
        return {ok, fmt("idempotence %.1e, |modulus-1| %.1e, trace excess %.1e, min eigenvalue %.1e, expansion %.1e",
                        idem, modulus, trace_excess, min_eig, expansion)};
    }

    // ------------------------------------------------------------------------
    // 5 and 10. RIS size sweep on the multi-user scenario

    struct SizeSweep
    {
        std::vector<int> sizes{16, 32, 64, 128};
        // [seed][size]
        std::vector<std::vector<double>> blocked_rate, gap, oracle_sum, none_sum;
    };

    const SizeSweep &size_sweep()
    {
        static const SizeSweep sweep = [] {
            SizeSweep s;
            for (int seed = 1; seed <= 10; ++seed)
            {
                ScenarioConfig cfg;
                cfg.rng_seed = static_cast<std::uint64_t>(500 + seed);
                cfg.scenario_trials = 10;
                std::vector<double> br, gap, os, ns;
                for (int nk : s.sizes)
                {
                    cfg.active_ris_elements = nk;
                    const auto oracle = run_scenario(cfg, ScenarioMode::ris_oracle);
                    const auto none = run_scenario(cfg, ScenarioMode::no_ris);
                    double blocked = 0.0;
                    for (std::size_t u = 0; u < oracle.user_rates.size(); ++u)
                        if (oracle.user_blocked[u])
                            blocked += oracle.user_rates[u] / cfg.blocked_users;
                    br.push_back(blocked);
                    gap.push_back(oracle.gap);
                    os.push_back(oracle.sum_rate);
                    ns.push_back(none.sum_rate);
                }
                s.blocked_rate.push_back(br);
                s.gap.push_back(gap);
                s.oracle_sum.push_back(os);
                s.none_sum.push_back(ns);
            }
            return s;
        }();
        return sweep;
    }

    Outcome rate_vs_ris_size()
    {
        const auto &s = size_sweep();
        int monotone = 0;
        std::vector<double> mean(s.sizes.size(), 0.0);
        for (const auto &row : s.blocked_rate)
        {
            bool ok = true;
            for (std::size_t i = 0; i < row.size(); ++i)
            {
                mean[i] += row[i] / s.blocked_rate.size();
                if (i > 0)
                    ok &= row[i] >= row[i - 1];
            }
            monotone += ok;
        }
        return {monotone == static_cast<int>(s.blocked_rate.size()),
                fmt("nondecreasing on %d/10 seeds; mean blocked-user rate %.4f %.4f %.4f %.4f bit/s/Hz", monotone,
                    mean[0], mean[1], mean[2], mean[3])};
    }

    Outcome blocked_user_recovery()
    {
        const auto &s = size_sweep();
        int beats = 0, shrinking = 0;
        std::vector<double> mean_gap(s.sizes.size(), 0.0);
        for (std::size_t seed = 0; seed < s.gap.size(); ++seed)
        {
            bool b = true, m = true;
            for (std::size_t i = 0; i < s.sizes.size(); ++i)
            {
                b &= s.oracle_sum[seed][i] > s.none_sum[seed][i];
                mean_gap[i] += s.gap[seed][i] / s.gap.size();
                if (i > 0)
                    m &= s.gap[seed][i] < s.gap[seed][i - 1];
            }
            beats += b;
            shrinking += m;
        }
        const int n = static_cast<int>(s.gap.size());
        return {beats == n && shrinking == n,
                fmt("oracle beats no-ris on %d/10 seeds; gap shrinking on %d/10; mean gap %.3f %.3f %.3f %.3f", beats,
                    shrinking, mean_gap[0], mean_gap[1], mean_gap[2], mean_gap[3])};
    }

    // ------------------------------------------------------------------------
    // 6. Momentum acceleration

    int iterations_to_90pct(const OptimizeResult &r)
    {
        if (r.initial_rate >= 0.9 * r.rate)
            return 0;
        for (const auto &rec : r.trace.records)
            if (rec.rate >= 0.9 * r.rate)
                return rec.iteration;
        return r.iterations;
    }

    Outcome momentum_acceleration()
    {
        int faster = 0, above_ao = 0;
        double it_m = 0.0, it_p = 0.0, margin = 0.0;
        for (int seed = 0; seed < 20; ++seed)
        {
            const auto p = desk_problem(derive_seed(601, seed), 16);
            Rng rng(derive_seed(602, seed));
            const auto start = initial_state(p, rng);
            OptimizerConfig oc;
            oc.max_iterations = 500;
            const auto accel = pgd_optimize(p, start, {}, oc);
            oc.momentum = false;
            const auto plain = pgd_optimize(p, start, {}, oc);
            const auto ao = ao_baseline(p, start, 500);
            const int im = iterations_to_90pct(accel), ip = iterations_to_90pct(plain);
            faster += im <= ip;
            above_ao += accel.rate >= ao.rate - 1e-6 && plain.rate >= ao.rate - 1e-6;
            it_m += im / 20.0;
            it_p += ip / 20.0;
            margin += (std::min(accel.rate, plain.rate) - ao.rate) / 20.0;
        }
        return {faster >= 16 && above_ao >= 16,
                fmt("momentum no slower on %d/20 seeds (mean %.1f vs %.1f iterations to 90%%); both above AO on "
                    "%d/20 (mean margin %.3f bit/s/Hz)",
                    faster, it_m, it_p, above_ao, margin)};
    }

    // ------------------------------------------------------------------------
    // 7. Momentum-off equivalence

    // Plain projected gradient with the same sufficient-decrease backtracking,
    // written out step by step. Each step is x + 0 * momentum - mu * d to match
    // the accelerated update with nu = delta = 0 in floating point.
    std::vector<std::pair<CVector, CMatrix>> plain_projected_gradient(const RateProblem &p, CVector theta, CMatrix g,
                                                                      int iters)
    {
        const LineSearchConfig ls;
        std::vector<std::pair<CVector, CMatrix>> seq;
        double mu_t = 1.0, mu_g = 1.0;
        auto f = [&](const CVector &th, const CMatrix &gg) { return -rate_value(p, th, gg); };
        double fx = f(theta, g);
        CVector prev;
        for (int n = 0; n < iters; ++n)
        {
            const auto g1 = rate_gradients(p, theta, g);
            CVector d(theta.size());
            for (Eigen::Index k = 0; k < d.size(); ++k)
            {
                const cdouble gk = -g1.theta(k);
                d(k) = gk - std::real(gk * std::conj(theta(k))) * theta(k);
            }
            bool moved_t = false;
            double mu = std::min(1.0, mu_t / ls.beta_theta);
            for (int m = 0; m <= ls.max_pullbacks; ++m, mu *= ls.beta_theta)
            {
                const CVector trial = project_phase(theta + (0.0 * CVector::Zero(d.size()) - mu * d));
                const double ft = f(trial, g);
                if (fx - ft >= ls.tol_theta * mu * d.squaredNorm())
                {
                    theta = trial, fx = ft, mu_t = mu, moved_t = true;
                    break;
                }
            }
            const CMatrix dg = -rate_gradients(p, theta, g).gain;
            bool moved_g = false;
            mu = std::min(1.0, mu_g / ls.beta_gain);
            for (int m = 0; m <= ls.max_pullbacks; ++m, mu *= ls.beta_gain)
            {
                const CMatrix trial =
                    project_gain(g + (0.0 * CMatrix::Zero(dg.rows(), dg.cols()) - mu * dg), p.budget);
                const double ft = f(theta, trial);
                if (fx - ft >= ls.tol_gain * mu * dg.squaredNorm())
                {
                    g = trial, fx = ft, mu_g = mu, moved_g = true;
                    break;
                }
            }
            seq.emplace_back(theta, g);
            const bool small = prev.size() == d.size() && (d - prev).squaredNorm() < 1e-8;
            prev = d;
            if ((!moved_t && !moved_g) || small)
                break;
        }
        return seq;
    }

    Outcome momentum_off_equivalence()
    {
        int compared = 0, mismatched = 0;
        for (int seed = 0; seed < 3; ++seed)
        {
            const auto p = desk_problem(derive_seed(701, seed), 10);
            Rng rng(derive_seed(702, seed));
            const auto start = initial_state(p, rng);
            const auto seq = plain_projected_gradient(p, start.theta, start.gain, 40);
            for (std::size_t n = 1; n <= seq.size(); ++n)
            {
                OptimizerConfig oc;
                oc.momentum = false;
                oc.max_iterations = static_cast<int>(n);
                const auto res = pgd_optimize(p, start, {}, oc);
                ++compared;
                mismatched += !(res.theta == seq[n - 1].first && res.gain == seq[n - 1].second);
            }
        }
        return {compared > 0 && mismatched == 0,
                fmt("%d iterates compared bit for bit, %d mismatched", compared, mismatched)};
    }

    // ------------------------------------------------------------------------
    // 8. Beamwidth/outage trade

    Outcome beamwidth_tradeoff()
    {
        ScenarioConfig cfg;
        cfg.csi_reliability = 0.85;
        cfg.n_trials = 10000;
        cfg.active_ris_elements = 512;
        const auto wide = estimate_outage(cfg, BeamPolicy::fixed, 801);
        cfg.active_ris_elements = 2048;
        const auto narrow = estimate_outage(cfg, BeamPolicy::fixed, 801);
        const bool ok = wide.probability < narrow.probability && wide.ci_disjoint_below(narrow) &&
                        wide.mean_rate <= narrow.mean_rate;
        return {ok, fmt("wide (%d el., %.2f deg) outage %.4f [%.4f, %.4f] rate %.3f; narrow (%d el., %.2f deg) "
                        "outage %.4f [%.4f, %.4f] rate %.3f",
                        wide.active_elements, wide.beamwidth * 180.0 / pi, wide.probability, wide.ci95_lo, wide.ci95_hi,
                        wide.mean_rate, narrow.active_elements, narrow.beamwidth * 180.0 / pi, narrow.probability,
                        narrow.ci95_lo, narrow.ci95_hi, narrow.mean_rate)};
    }

    // ------------------------------------------------------------------------
    // 9. Outage vs power

    Outcome outage_vs_power()
    {
        ScenarioConfig cfg;
        cfg.n_trials = 10000;
        const auto rows = param_sweep(cfg, "omega_tot", {0.01, 0.02, 0.03, 0.05, 0.1, 0.2});
        bool ok = true;
        std::string values;
        for (std::size_t i = 0; i < rows.size(); ++i)
        {
            values += fmt("%s%.4f", i ? " " : "", rows[i].metric("outage"));
            if (i > 0)
                ok &= rows[i].metric("outage") <= rows[i - 1].metric("outage");
        }
        const bool separated = rows.back().metric("ci95_hi") < rows.front().metric("ci95_lo");
        return {ok && separated, "outage over 0.01..0.2 W: " + values +
                                     (separated ? "; endpoint CIs disjoint" : "; endpoint CIs overlap")};
    }

    // ------------------------------------------------------------------------
    // 11. End-to-end determinism

    std::string slurp(const fs::path &p)
    {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    Outcome cli_determinism()
    {
        const auto root = fs::temp_directory_path() / "risnp_acceptance_determinism";
        fs::remove_all(root);
        const std::string config = std::string(RISNP_SOURCE_DIR) + "/configs/desk.toml";
        const std::vector<std::pair<std::string, std::string>> verbs = {
            {"roc", "--snr 2,6,10 --trials 1000"},
            {"outage", "--trials 1000"},
            {"rate", "--trials 2"},
            {"converge", "--trials 200"},
            {"sweep", "--param omega_tot --grid 0.01,0.05,0.1 --trials 1000"},
            {"selftest", ""}};
        int identical = 0;
        std::string failed;
        for (const auto &[verb, args] : verbs)
        {
            bool same = true;
            for (const char *run : {"a", "b"})
            {
                // The second run uses two worker threads.
                const std::string cmd = std::string(RISNP_CLI_PATH) + " " + verb + " --config " + config +
                                        " --seed 7 " + args + (run[0] == 'b' ? " --threads 2" : " --threads 1") +
                                        " --out " + (root / run).string() + " > /dev/null 2>&1";
                same &= std::system(cmd.c_str()) == 0;
            }
            for (const char *ext : {".csv", ".json"})
            {
                const auto a = slurp(root / "a" / (verb + ext)), b = slurp(root / "b" / (verb + ext));
                same &= !a.empty() && a == b;
            }
            identical += same;
            if (!same)
                failed += " " + verb;
        }
        const int n = static_cast<int>(verbs.size());
        return {identical == n, fmt("%d/%d verbs byte-identical across re-runs", identical, n) +
                                    (failed.empty() ? "" : "; differing:" + failed)};
    }
} // namespace

// Optional arguments select criteria by number; default runs all.
int main(int argc, char **argv)
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"ROC improvement with SNR", roc_improvement},
        {"Detector calibration", calibration},
        {"Gradient oracle", gradient_oracle},
        {"Projection properties", projections},
        {"Rate vs RIS size", rate_vs_ris_size},
        {"Momentum acceleration", momentum_acceleration},
        {"Momentum-off equivalence", momentum_off_equivalence},
        {"Beamwidth/outage trade", beamwidth_tradeoff},
        {"Outage vs power", outage_vs_power},
        {"Blocked-user recovery", blocked_user_recovery},
        {"End-to-end determinism", cli_determinism}};

    std::vector<bool> selected(criteria.size(), argc == 1);
    for (int a = 1; a < argc; ++a)
    {
        const int k = std::atoi(argv[a]);
        if (k < 1 || k > static_cast<int>(criteria.size()))
        {
            std::fprintf(stderr, "acceptance: no criterion %s\n", argv[a]);
            return 2;
        }
        selected[k - 1] = true;
    }

    int failures = 0, run = 0;
    const auto suite_start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < criteria.size(); ++i)
    {
        if (!selected[i])
            continue;
        ++run;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = criteria[i].second();
        }
        catch (const std::exception &e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !o.passed;
        std::printf("%s %2zu %s: %s [%.1f s]\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - suite_start).count();
    std::printf("%d/%d criteria passed in %.1f s\n", run - failures, run, total);
    return failures == 0 ? 0 : 1;
}
