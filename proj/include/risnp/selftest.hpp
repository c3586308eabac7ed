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

#ifndef RISNP_SELFTEST_HPP
#define RISNP_SELFTEST_HPP

#include "montecarlo.hpp"

#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace risnp
{
    struct SelftestResult
    {
        std::string name;
        bool passed = false;
        std::string detail;
    };

    namespace detail
    {
        inline CMatrix selftest_matrix(Rng &rng, Eigen::Index rows, Eigen::Index cols, double var = 1.0)
        {
            CMatrix m(rows, cols);
            for (Eigen::Index c = 0; c < cols; ++c)
                for (Eigen::Index r = 0; r < rows; ++r)
                    m(r, c) = complex_gaussian(rng, var);
            return m;
        }

        inline RateProblem selftest_problem(std::uint64_t seed, int nk)
        {
            Rng rng(seed);
            RateProblem p;
            p.direct = 0.3 * selftest_matrix(rng, 2, 4);
            p.ris_ms = selftest_matrix(rng, 2, nk, 1.0 / nk);
            p.bs_ris = selftest_matrix(rng, nk, 4);
            p.j0 = 1.0;
            p.budget = 2.0;
            return p;
        }

        inline ScenarioConfig selftest_config(std::uint64_t seed)
        {
            ScenarioConfig c;
            c.ris_rows = 8;
            c.ris_cols = 16;
            c.active_ris_elements = 64;
            c.n_trials = 1000;
            c.users = 3;
            c.blocked_users = 1;
            c.scenario_trials = 2;
            c.calib_trials = 1000;
            c.fspl_cascade_constant = 0.1;
            c.rng_seed = seed;
            return c;
        }

        inline std::string fmt(double v)
        {
            std::ostringstream os;
            os.precision(6);
            os << v;
            return os.str();
        }

        inline double max_abs(const CMatrix &m) { return m.cwiseAbs().maxCoeff(); }

        inline SelftestResult check_steering(std::uint64_t seed)
        {
            Rng rng(seed);
            double worst = 0.0;
            for (int i = 0; i < 200; ++i)
            {
                const auto geom = i % 2 ? ArrayGeometry::ura(1 + i % 7, 1 + i % 11) : ArrayGeometry::ula(1 + i % 64);
                const CVector a = steering_vector(geom, uniform(rng, -pi, pi), uniform(rng, -pi / 2, pi / 2));
                worst = std::max(worst, std::abs(a.norm() - 1.0));
            }
            return {"steering_unit_norm", worst <= 1e-12, "max deviation " + fmt(worst)};
        }

        inline SelftestResult check_gradients(std::uint64_t seed)
        {
            double worst = 0.0;
            for (int t = 0; t < 10; ++t)
            {
                const int nk = 8 + t;
                const auto p = selftest_problem(derive_seed(seed, t), nk);
                Rng rng(derive_seed(seed, 100 + t));
                auto st = initial_state(p, rng);
                st.gain = project_gain(selftest_matrix(rng, 4, 4), p.budget);
                const auto an = rate_gradients(p, st.theta, st.gain);
                const CVector fd_t = finite_diff_gradient(
                    [&](const CVector &th) { return rate_value(p, th, st.gain); }, st.theta, 1e-6);
                const CMatrix fd_g = finite_diff_gradient(
                    [&](const CMatrix &g) { return rate_value(p, st.theta, g); }, st.gain, 1e-6);
                worst = std::max({worst, max_abs(an.theta - fd_t) / max_abs(fd_t), max_abs(an.gain - fd_g) / max_abs(fd_g)});
            }
            return {"rate_gradients", worst <= 1e-5, "max relative error " + fmt(worst)};
        }

        inline SelftestResult check_projections(std::uint64_t seed)
        {
            Rng rng(seed);
            bool ok = true;
            for (int i = 0; i < 50; ++i)
            {
                const CVector z = selftest_matrix(rng, 16, 1).col(0);
                const CVector t = project_phase(z);
                ok &= (t.cwiseAbs().array() - 1.0).abs().maxCoeff() <= 1e-12;
                ok &= (project_phase(t) - t).norm() <= 1e-12;
                const CMatrix g = project_gain(selftest_matrix(rng, 4, 4), 1.5);
                Eigen::SelfAdjointEigenSolver<CMatrix> es(g);
                ok &= g.trace().real() <= 1.5 + 1e-9 && es.eigenvalues().minCoeff() >= -1e-9;
                ok &= (project_gain(g, 1.5) - g).norm() <= 1e-12;
            }
            return {"projections", ok, ok ? "feasible and idempotent" : "violated"};
        }

        inline SelftestResult check_calibration(std::uint64_t seed)
        {
            const auto cfg = selftest_config(seed);
            const auto sc = detection_scenario(cfg);
            const double alpha = 0.05;
            const auto model = threshold_for_alpha(calibrate_densities(sc, 10.0, 2000, derive_seed(seed, 1)), alpha);
            const auto h0 = run_detection_trials(sc, 10.0, false, 2000, derive_seed(seed, 2));
            int fa = 0;
            for (const auto &t : h0)
                fa += acts_as_nlos(lrt_decide_estimates(t.per_sample, model).decision);
            const double p_fa = fa / 2000.0;
            const double slack = 3.0 * std::sqrt(alpha * (1.0 - alpha) / 2000.0);
            return {"detector_calibration", p_fa <= alpha + slack, "held-out false alarm " + fmt(p_fa)};
        }

        inline SelftestResult check_roc(std::uint64_t seed)
        {
            const auto sc = detection_scenario(selftest_config(seed));
            const auto curves = roc_sweep(sc, {2.0, 10.0}, 0, 1000, seed);
            const double lo = pd_at_pfa(curves[0].points, 0.05), hi = pd_at_pfa(curves[1].points, 0.05);
            return {"roc_snr_ordering", hi >= lo, "p_d at 5% false alarm: " + fmt(lo) + " -> " + fmt(hi)};
        }

        inline SelftestResult check_optimizer(std::uint64_t seed)
        {
            bool ok = true;
            double margin = 1e300;
            for (int t = 0; t < 3; ++t)
            {
                const auto p = selftest_problem(derive_seed(seed, t), 16);
                Rng rng(derive_seed(seed, 10 + t));
                const auto start = initial_state(p, rng);
                const auto pgd = pgd_optimize(p, start, {}, {});
                const auto ao = ao_baseline(p, start, 500);
                ok &= pgd.rate >= ao.rate - 1e-6 && pgd.rate >= pgd.initial_rate;
                margin = std::min(margin, pgd.rate - ao.rate);
            }
            return {"pgd_vs_ao", ok, "smallest PGD margin over AO " + fmt(margin) + " bit/s/Hz"};
        }

        inline SelftestResult check_outage_power(std::uint64_t seed)
        {
            auto cfg = selftest_config(seed);
            cfg.omega_tot = 0.01;
            const auto low = estimate_outage(cfg, BeamPolicy::fixed, seed);
            cfg.omega_tot = 0.1;
            const auto high = estimate_outage(cfg, BeamPolicy::fixed, seed);
            return {"outage_vs_power", high.probability < low.probability,
                    "outage " + fmt(low.probability) + " -> " + fmt(high.probability)};
        }

        inline SelftestResult check_mode_ordering(std::uint64_t seed)
        {
            const auto cfg = selftest_config(seed);
            const auto none = run_scenario(cfg, ScenarioMode::no_ris);
            const auto oracle = run_scenario(cfg, ScenarioMode::ris_oracle);
            return {"mode_ordering", oracle.sum_rate >= none.sum_rate,
                    "sum rate " + fmt(none.sum_rate) + " -> " + fmt(oracle.sum_rate)};
        }

        inline SelftestResult check_determinism(std::uint64_t seed)
        {
            const auto cfg = selftest_config(seed);
            const auto a = estimate_outage(cfg, BeamPolicy::adaptive, seed, 1);
            const auto b = estimate_outage(cfg, BeamPolicy::adaptive, seed, 2);
            const bool ok = a.outages == b.outages && a.trials == b.trials && a.mean_rate == b.mean_rate;
            return {"thread_determinism", ok, ok ? "identical for 1 and 2 threads" : "results differ"};
        }
    } // namespace detail

    // Desk-scale checks that run in seconds.
    inline std::vector<SelftestResult> run_selftest(std::uint64_t seed)
    {
        const std::vector<std::function<SelftestResult(std::uint64_t)>> checks = {
            detail::check_steering,    detail::check_gradients,    detail::check_projections,
            detail::check_calibration, detail::check_roc,          detail::check_optimizer,
            detail::check_outage_power, detail::check_mode_ordering, detail::check_determinism};
        std::vector<SelftestResult> out;
        for (const auto &check : checks)
        {
            try
            {
                out.push_back(check(seed));
            }
            catch (const std::exception &e)
            {
                out.push_back({"check", false, e.what()});
            }
        }
        return out;
    }
} // namespace risnp

#endif
