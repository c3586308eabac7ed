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

#ifndef RISNP_MONTECARLO_HPP
#define RISNP_MONTECARLO_HPP

#include "beamforming.hpp"
#include "channel.hpp"
#include "config.hpp"
#include "detection.hpp"
#include "optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace risnp
{
    // ------------------------------------------------------------------------
    // Trial scheduling

    // Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware).
    // Each index writes only its own slot, so results do not depend on scheduling.
    inline void parallel_for(int n, const std::function<void(int)> &body, int threads = 0)
    {
        if (n <= 0)
            return;
        int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
        workers = std::min(workers, n);
        if (workers == 1)
        {
            for (int i = 0; i < n; ++i)
                body(i);
            return;
        }
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try
                {
                    for (int i = w; i < n; i += workers)
                        body(i);
                }
                catch (...)
                {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        for (auto &t : pool)
            t.join();
        for (auto &e : errors)
            if (e)
                std::rethrow_exception(e);
    }

    // ------------------------------------------------------------------------
    // Outage estimate

    struct WilsonInterval
    {
        double lo = 0.0;
        double hi = 1.0;
        double center = 0.5;
        double halfwidth = 0.5;
    };

    inline WilsonInterval wilson_interval(long successes, long trials, double z = 1.959963984540054)
    {
        require(trials >= 1 && successes >= 0 && successes <= trials, "wilson_interval: invalid counts");
        const double n = static_cast<double>(trials);
        const double p = static_cast<double>(successes) / n;
        const double z2 = z * z;
        const double denom = 1.0 + z2 / n;
        WilsonInterval w;
        w.center = (p + z2 / (2.0 * n)) / denom;
        w.halfwidth = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
        w.lo = successes == 0 ? 0.0 : std::max(0.0, w.center - w.halfwidth);
        w.hi = successes == trials ? 1.0 : std::min(1.0, w.center + w.halfwidth);
        return w;
    }

    struct OutageEstimate
    {
        double probability = 0.0;
        int trials = 0;
        int outages = 0;
        double ci95_halfwidth = 0.0;
        double ci95_lo = 0.0;
        double ci95_hi = 1.0;
        double mean_rate = 0.0;        // bit/s/Hz over served trials
        double served_fraction = 1.0;  // trials meeting the phase-error constraint
        int active_elements = 0;
        double beamwidth = 0.0;        // rad

        bool ci_disjoint_below(const OutageEstimate &other) const { return ci95_hi < other.ci95_lo; }
    };

    inline OutageEstimate make_outage_estimate(int outages, int trials)
    {
        const auto w = wilson_interval(outages, trials);
        OutageEstimate e;
        e.trials = trials;
        e.outages = outages;
        e.probability = static_cast<double>(outages) / trials;
        e.ci95_halfwidth = w.halfwidth;
        e.ci95_lo = w.lo;
        e.ci95_hi = w.hi;
        return e;
    }

    enum class BeamPolicy
    {
        fixed,
        adaptive
    };

    inline std::string to_string(BeamPolicy p) { return p == BeamPolicy::fixed ? "fixed" : "adaptive"; }

    inline BeamPolicy parse_policy(const std::string &s)
    {
        if (s == "fixed")
            return BeamPolicy::fixed;
        if (s == "adaptive")
            return BeamPolicy::adaptive;
        throw InvalidArgument("unknown beam policy '" + s + "' (expected fixed or adaptive)");
    }

    // ------------------------------------------------------------------------
    // Scenario geometry

    // Squarest rows x cols shape with at most `count` elements that fits the
    // panel, preferring the largest element count.
    inline std::pair<int, int> subarray_shape(int rows, int cols, int count)
    {
        require(count >= 1, "subarray needs at least one element");
        int best_r = 1, best_c = 1;
        for (int r = 1; r <= rows; ++r)
        {
            const int c = std::min(cols, count / r);
            if (c < 1)
                break;
            const bool better = r * c > best_r * best_c ||
                                (r * c == best_r * best_c && std::abs(r - c) < std::abs(best_r - best_c));
            if (better)
                best_r = r, best_c = c;
        }
        return {best_r, best_c};
    }

    // BS at the origin, RIS at d_bs_ris; the MS sits d_ris_ms beyond the RIS
    // at a right angle, so the direct distance is the hypotenuse.
    inline double direct_distance(const ScenarioConfig &cfg) { return std::hypot(cfg.d_bs_ris_m, cfg.d_ris_ms_m); }

    inline LinkLayout scenario_layout(const ScenarioConfig &cfg, const ArrayGeometry &ris)
    {
        LinkLayout l;
        l.bs = ArrayGeometry::ula(cfg.n_tx);
        l.ms = ArrayGeometry::ula(cfg.n_rx);
        l.ris = ris;
        l.clusters_direct = 1;
        l.clusters_bs_ris = 1;
        l.clusters_ris_ms = cfg.clusters_ris_ms;
        l.bs_ris_aod = cfg.bs_ris_angle_deg * pi / 180.0;
        l.ris_incidence = {pi - l.bs_ris_aod, 0.0};
        l.scatter_power = cfg.scatter_power;
        const auto g = path_gains(direct_distance(cfg), cfg.d_bs_ris_m, cfg.d_ris_ms_m, cfg.carrier_hz,
                                  cfg.fspl_cascade_constant);
        l.rho_direct = g.direct;
        l.rho_cascade = g.cascade;
        l.kappa = cfg.kappa;
        return l;
    }

    inline LinkBudget scenario_budget(const ScenarioConfig &cfg) { return {cfg.noise_power(), cfg.interference}; }

    // Phases that steer the dominant incidence direction toward `departure`
    // on the masked elements; masked-out elements are switched off (0).
    inline PhaseVector reflect_phases(const ArrayGeometry &ris, const AnglePair &incidence, const AnglePair &departure,
                                      const std::vector<char> &mask = {})
    {
        const CVector a_in = steering_vector(ris, incidence.azimuth, incidence.elevation);
        const CVector a_out = steering_vector(ris, departure.azimuth, departure.elevation);
        PhaseVector t(ris.size());
        for (int n = 0; n < ris.size(); ++n)
        {
            const bool on = mask.empty() || mask[static_cast<std::size_t>(n)];
            t(n) = on ? std::polar(1.0, std::arg(a_out(n)) - std::arg(a_in(n))) : cdouble(0.0, 0.0);
        }
        return t;
    }

    // Grid search plus golden-section refinement of the azimuth that maximizes
    // |a(phi)^H h| for a ULA pilot observation.
    inline double estimate_aod(const ArrayGeometry &ula, const CVector &h, double grid_step = 0.5 * pi / 180.0)
    {
        auto score = [&](double az) { return std::norm(steering_vector(ula, az).dot(h)); };
        double best = 0.0, best_s = -1.0;
        for (double az = 0.0; az <= pi + 1e-12; az += grid_step)
            if (const double s = score(az); s > best_s)
                best_s = s, best = az;
        double lo = std::max(0.0, best - grid_step), hi = std::min(pi, best + grid_step);
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
        double f1 = score(x1), f2 = score(x2);
        while (hi - lo > 1e-9)
        {
            if (f1 < f2)
                lo = x1, x1 = x2, f1 = f2, x2 = lo + g * (hi - lo), f2 = score(x2);
            else
                hi = x2, x2 = x1, f2 = f1, x1 = hi - g * (hi - lo), f1 = score(x1);
        }
        return 0.5 * (lo + hi);
    }

    // Beamwidth needed to keep a receiver that moves `mobility` metres at
    // range `distance` inside the main lobe.
    inline double coverage_beamwidth(double mobility, double distance)
    {
        return 2.0 * std::atan(mobility / distance);
    }

    inline ActiveSubarray outage_subarray(const ScenarioConfig &cfg, BeamPolicy policy)
    {
        const auto ris = ArrayGeometry::ura(cfg.ris_rows, cfg.ris_cols);
        ActiveSubarray s;
        if (policy == BeamPolicy::adaptive)
        {
            const double target = coverage_beamwidth(cfg.mobility_m, cfg.d_ris_ms_m);
            s = select_active_elements(ris, std::max(target, subarray_hpbw(cfg.ris_rows, cfg.ris_cols)));
        }
        else
        {
            const auto [r, c] = subarray_shape(cfg.ris_rows, cfg.ris_cols, cfg.active_ris_elements);
            s = make_centered_subarray(ris, r, c);
            s.width = subarray_hpbw(r, c);
        }
        return s;
    }

    // Quantities shared by every trial of one outage estimate. The BS and
    // RIS are fixed, so their link is drawn once and only its product with
    // the BS beam is kept.
    struct OutageSetup
    {
        ArrayGeometry ris;
        ActiveSubarray sub;
        LinkLayout layout;
        CVector beam;          // BS precoder f, |f|^2 = omega_tot
        CVector bs_ris_beam;   // H_bs_ris f
        double upsilon1 = 0.0; // NLoS cascade weight
        LinkBudget budget;
        double j0 = 1.0;
    };

    inline OutageSetup make_outage_setup(const ScenarioConfig &cfg, BeamPolicy policy, std::uint64_t rng_seed)
    {
        OutageSetup s;
        s.ris = ArrayGeometry::ura(cfg.ris_rows, cfg.ris_cols);
        s.sub = outage_subarray(cfg, policy);
        s.layout = scenario_layout(cfg, s.ris);
        s.layout.epsilon = 0.0;
        s.beam = steered_beam(s.layout.bs, s.layout.bs_ris_aod, 0.0, cfg.omega_tot).f.col(0);
        Rng rng(derive_seed(rng_seed, 0xB5B15ULL));
        const auto clusters = draw_bs_ris_clusters(s.layout, rng);
        s.bs_ris_beam = std::sqrt(static_cast<double>(s.ris.size()) * cfg.n_tx) *
                        apply_path_channel(s.layout.bs, s.ris, clusters, s.beam);
        ChannelRealization probe;
        probe.rho_cascade = s.layout.rho_cascade;
        probe.kappa = s.layout.kappa;
        s.upsilon1 = probe.upsilon1(false);
        s.budget = scenario_budget(cfg);
        s.j0 = s.budget.j0(cfg.n_tx);
        return s;
    }

    // Phase MSE over the active elements after removing the best common
    // rotation, which leaves the reflected beam unchanged.
    inline double aligned_phase_mse(const PhaseVector &ideal, const PhaseVector &estimate, int active)
    {
        const cdouble c = estimate.dot(ideal);
        const cdouble rot = std::abs(c) > 0.0 ? c / std::abs(c) : cdouble(1.0, 0.0);
        return phase_mse(ideal, PhaseVector(estimate * rot)) * ideal.size() / std::max(1, active);
    }

    struct OutageTrial
    {
        bool served = true;
        bool outage = false;
        double sinr = 0.0;
        double rate = 0.0;
        double phase_mse = 0.0;
        double azimuth_train = 0.0;  // MS direction seen from the RIS at training
        double azimuth_hat = 0.0;    // its pilot estimate
        double azimuth_true = 0.0;   // direction during data transmission
        CMatrix h_ris_ms;            // data-phase RIS-MS channel
        PhaseVector theta;
    };

    // One blocked-user trial: estimate the RIS departure angle from a noisy
    // pilot, let the MS move, and evaluate the reflected link. With a rank-one
    // transmit covariance f f^H the SINR is |u1 H_rms diag(theta) H_bri f|^2 / J0
    // and the rate is log2(1 + SINR).
    inline OutageTrial outage_trial(const ScenarioConfig &cfg, const OutageSetup &s, std::uint64_t seed,
                                    bool keep_channel = false)
    {
        Rng rng(seed);
        OutageTrial t;
        t.azimuth_train = uniform(rng, pi / 6.0, 5.0 * pi / 6.0);

        // Pilot along one RIS row, corrupted at the configured reliability.
        const auto pilot_geom = ArrayGeometry::ula(cfg.pilot_elements);
        const CMatrix pilot =
            std::sqrt(static_cast<double>(cfg.pilot_elements)) * steering_vector(pilot_geom, t.azimuth_train);
        const CMatrix pilot_hat = inject_csi_error(pilot, {cfg.csi_reliability, rng()});
        t.azimuth_hat = estimate_aod(pilot_geom, pilot_hat.col(0));

        const double drift = std::atan(cfg.mobility_m * uniform(rng, -1.0, 1.0) / cfg.d_ris_ms_m);
        t.azimuth_true = std::clamp(t.azimuth_train + drift, 0.0, pi);

        LinkLayout layout = s.layout;
        layout.ris_to_ms = {t.azimuth_true, 0.0};
        const auto clusters = draw_ris_ms_clusters(layout, rng);
        CMatrix h_rms = std::sqrt(static_cast<double>(cfg.n_rx) * s.ris.size()) *
                        gen_path_channel(s.ris, layout.ms, clusters);

        PhaseVector theta = reflect_phases(s.ris, layout.ris_incidence, {t.azimuth_hat, 0.0}, s.sub.mask);
        const PhaseVector ideal = reflect_phases(s.ris, layout.ris_incidence, {t.azimuth_train, 0.0}, s.sub.mask);
        t.phase_mse = aligned_phase_mse(ideal, theta, s.sub.count());
        t.served = t.phase_mse < cfg.phase_mse_max;

        const CVector z = s.upsilon1 * (h_rms * theta.cwiseProduct(s.bs_ris_beam));
        t.sinr = z.squaredNorm() / s.j0;
        t.rate = std::log2(1.0 + t.sinr);
        t.outage = t.sinr <= cfg.gamma_th;
        if (keep_channel)
        {
            t.h_ris_ms = std::move(h_rms);
            t.theta = std::move(theta);
        }
        return t;
    }

    inline OutageEstimate estimate_outage(const ScenarioConfig &cfg, BeamPolicy policy, std::uint64_t rng_seed,
                                          int threads = 0)
    {
        cfg.validate();
        require(cfg.n_trials >= 1000, "estimate_outage needs at least 1000 trials");
        const auto setup = make_outage_setup(cfg, policy, rng_seed);
        std::vector<OutageTrial> trials(static_cast<std::size_t>(cfg.n_trials));
        parallel_for(
            cfg.n_trials,
            [&](int i) { trials[static_cast<std::size_t>(i)] = outage_trial(cfg, setup, derive_seed(rng_seed, i)); },
            threads);

        // Only trials meeting the phase-error constraint are served; the
        // outage ratio and mean rate are taken over those.
        int outages = 0, served = 0;
        double rate = 0.0;
        for (const auto &t : trials)
            if (t.served)
            {
                ++served;
                outages += t.outage;
                rate += t.rate;
            }
        OutageEstimate e;
        if (served > 0)
        {
            e = make_outage_estimate(outages, served);
            e.mean_rate = rate / served;
        }
        else
            e.probability = 1.0;
        e.served_fraction = static_cast<double>(served) / cfg.n_trials;
        e.active_elements = setup.sub.count();
        e.beamwidth = setup.sub.width;
        return e;
    }

    // ------------------------------------------------------------------------
    // Multi-user scenario

    enum class ScenarioMode
    {
        no_ris,
        ris_oracle,
        ris_np
    };

    inline std::string to_string(ScenarioMode m)
    {
        switch (m)
        {
        case ScenarioMode::no_ris:
            return "no-ris";
        case ScenarioMode::ris_oracle:
            return "ris-oracle-detection";
        default:
            return "ris-np-detection";
        }
    }

    inline ScenarioMode parse_mode(const std::string &s)
    {
        if (s == "no-ris")
            return ScenarioMode::no_ris;
        if (s == "ris-oracle-detection")
            return ScenarioMode::ris_oracle;
        if (s == "ris-np-detection")
            return ScenarioMode::ris_np;
        throw InvalidArgument("unknown scenario mode '" + s + "'");
    }

    // Capacity-achieving covariance for a fixed channel: water-filling over
    // the eigenmodes of H^H H / J0 under tr(G) <= budget.
    inline CMatrix waterfill_gain(const CMatrix &h, double j0, double budget)
    {
        require(j0 > 0.0 && budget >= 0.0, "waterfill_gain: invalid noise or budget");
        const Eigen::Index nt = h.cols();
        CMatrix m = h.adjoint() * h / j0;
        m = 0.5 * (m + m.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
        const RVector lam = es.eigenvalues();
        std::vector<Eigen::Index> order;
        for (Eigen::Index i = 0; i < nt; ++i)
            if (lam(i) > 1e-300)
                order.push_back(i);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return lam(a) > lam(b); });

        RVector p = RVector::Zero(nt);
        for (std::size_t k = order.size(); k >= 1; --k)
        {
            double inv = 0.0;
            for (std::size_t i = 0; i < k; ++i)
                inv += 1.0 / lam(order[i]);
            const double mu = (budget + inv) / static_cast<double>(k);
            if (mu - 1.0 / lam(order[k - 1]) > 0.0)
            {
                for (std::size_t i = 0; i < k; ++i)
                    p(order[i]) = mu - 1.0 / lam(order[i]);
                break;
            }
        }
        CMatrix g = es.eigenvectors() * p.cast<cdouble>().asDiagonal() * es.eigenvectors().adjoint();
        return 0.5 * (g + g.adjoint());
    }

    // Rescales a problem to unit noise and unit budget; rates are unchanged
    // and the optimizer sees gradients of order one.
    inline RateProblem normalized_problem(RateProblem p)
    {
        const double s = std::sqrt(p.budget / p.j0);
        p.direct *= s;
        p.ris_ms *= s;
        p.j0 = 1.0;
        p.budget = 1.0;
        return p;
    }

    // Starts from the phases that co-phase the dominant BS-RIS and RIS-MS
    // modes, with all power on the dominant BS-RIS direction.
    inline OptimizerState aligned_state(const RateProblem &p)
    {
        Eigen::SelfAdjointEigenSolver<CMatrix> tx(p.bs_ris.adjoint() * p.bs_ris);
        const CVector v = tx.eigenvectors().col(p.n_tx() - 1);
        Eigen::SelfAdjointEigenSolver<CMatrix> rx(p.ris_ms * p.ris_ms.adjoint());
        const CVector m = rx.eigenvectors().col(p.ris_ms.rows() - 1);
        const CVector b = p.bs_ris * v;
        const CVector u = p.ris_ms.adjoint() * m;
        PhaseVector theta(p.n_ris());
        for (Eigen::Index n = 0; n < theta.size(); ++n)
            theta(n) = std::polar(1.0, std::arg(u(n)) - std::arg(b(n)));
        return make_state(theta, p.budget * v * v.adjoint());
    }

    struct UserResult
    {
        bool blocked = false;
        bool via_ris = false;
        double rate = 0.0;
        double reference_rate = 0.0;  // same user, unblocked, direct link only
        double sinr = 0.0;
        bool outage = false;
    };

    struct ScenarioMetrics
    {
        ScenarioMode mode = ScenarioMode::no_ris;
        int trials = 0;
        std::vector<double> user_rates;  // mean per user
        std::vector<char> user_blocked;
        double sum_rate = 0.0;
        double reference_sum_rate = 0.0;  // every user unblocked, no RIS
        double gap = 0.0;                 // reference minus achieved
        double outage = 0.0;              // fraction of user-trials with SINR <= gamma_th
        double p_miss = 0.0;              // blocked users judged LoS
        double p_false_alarm = 0.0;       // unblocked users judged NLoS
        int active_elements = 0;
    };

    inline DetectionScenario detection_scenario(const ScenarioConfig &cfg)
    {
        DetectionScenario sc;
        sc.layout = scenario_layout(cfg, ArrayGeometry::ura(2, 2));
        sc.layout.rho_direct = 1.0;
        sc.layout.rho_cascade = 1.0;
        sc.samples = cfg.detection_samples;
        sc.blockage = {cfg.blockage_rate, {0.0, 0.0, 1.0, 1.0}};
        return sc;
    }

    // Detection pass for a user with a known blockage level.
    inline bool detect_nlos(const DetectionScenario &sc, const DetectorModel &model, double snr_db, double epsilon,
                            std::uint64_t seed)
    {
        Rng rng(seed);
        auto real = draw_realization(sc.layout, rng);
        const Precoder f = steered_beam(sc.layout.bs, sc.layout.direct_aod.azimuth, 0.0, sc.budget);
        const GainMatrix g = transmit_covariance(f);
        const double u0 = real.upsilon0(true);
        const auto batch =
            synthesize_batch(real.h_direct, f.f.col(0), u0, epsilon, sc.noise_power(snr_db), sc.samples, rng);
        return acts_as_nlos(lrt_decide(batch, model, g, real.h_direct, u0).decision);
    }

    inline UserResult scenario_user(const ScenarioConfig &cfg, ScenarioMode mode, const ArrayGeometry &ris,
                                    bool blocked, const DetectionScenario *det_sc, const DetectorModel *model,
                                    bool *judged_nlos, std::uint64_t seed)
    {
        Rng rng(seed);
        auto layout = scenario_layout(cfg, ris);
        layout.direct_aod = {uniform(rng, pi / 6.0, 5.0 * pi / 6.0), 0.0};
        layout.ris_to_ms = {uniform(rng, pi / 6.0, 5.0 * pi / 6.0), 0.0};
        layout.epsilon = blocked ? 0.0 : 1.0;
        const auto real = draw_realization(layout, rng);
        const std::uint64_t det_seed = rng();

        const LinkBudget lb = scenario_budget(cfg);
        const double budget = cfg.omega_tot / cfg.users;
        const double j0 = lb.j0(cfg.n_tx);
        const bool los = !blocked;

        UserResult u;
        u.blocked = blocked;
        {
            const CMatrix h_ref = real.upsilon0(true) * real.h_direct;
            u.reference_rate = achievable_rate(h_ref, {waterfill_gain(h_ref, j0, budget), budget}, lb);
        }

        bool route = false;
        if (mode == ScenarioMode::ris_oracle)
            route = blocked;
        else if (mode == ScenarioMode::ris_np)
        {
            route = detect_nlos(*det_sc, *model, cfg.snr_db, layout.epsilon, det_seed);
            if (judged_nlos)
                *judged_nlos = route;
        }
        u.via_ris = route;

        if (!route)
        {
            const CMatrix h = real.epsilon * real.upsilon0(los) * real.h_direct;
            const CMatrix g = waterfill_gain(h, j0, budget);
            u.rate = achievable_rate(h, {g, budget}, lb);
            u.sinr = sinr(real, PhaseVector::Zero(real.n_ris()), {g, budget}, lb, los);
        }
        else
        {
            // Two starts: all power toward the RIS, and the direct-link
            // water-filling covariance; the better optimum is kept.
            const auto p = normalized_problem(RateProblem::from_realization(real, lb, budget, los));
            auto res = pgd_optimize(p, aligned_state(p), {}, {});
            if (p.direct.norm() > 0.0)
            {
                auto start = aligned_state(p);
                start.gain = waterfill_gain(p.direct, p.j0, p.budget);
                auto alt = pgd_optimize(p, start, {}, {});
                if (alt.rate > res.rate)
                    res = std::move(alt);
            }
            const GainMatrix g{res.gain * budget, budget};
            u.rate = achievable_rate(compose_effective_channel(real, res.theta, los), g, lb);
            u.sinr = sinr(real, res.theta, g, lb, los);
        }
        u.outage = u.sinr <= cfg.gamma_th;
        return u;
    }

    inline ScenarioMetrics run_scenario(const ScenarioConfig &cfg, ScenarioMode mode, int threads = 0)
    {
        cfg.validate();
        const auto [rows, cols] = subarray_shape(cfg.ris_rows, cfg.ris_cols, cfg.active_ris_elements);
        const auto ris = ArrayGeometry::ura(rows, cols);

        DetectionScenario det_sc;
        DetectorModel model;
        if (mode == ScenarioMode::ris_np)
        {
            det_sc = detection_scenario(cfg);
            model = threshold_for_alpha(
                calibrate_densities(det_sc, cfg.snr_db, cfg.calib_trials, derive_seed(cfg.rng_seed, 0xD37EC7)),
                cfg.alpha);
        }

        const int n = cfg.scenario_trials, k = cfg.users;
        std::vector<UserResult> results(static_cast<std::size_t>(n * k));
        std::vector<char> judged(static_cast<std::size_t>(n * k), 0);
        parallel_for(
            n * k,
            [&](int idx) {
                const int t = idx / k, user = idx % k;
                bool nlos = false;
                results[static_cast<std::size_t>(idx)] =
                    scenario_user(cfg, mode, ris, user < cfg.blocked_users, &det_sc, &model, &nlos,
                                  derive_seed(derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(t)), user));
                judged[static_cast<std::size_t>(idx)] = nlos;
            },
            threads);

        ScenarioMetrics m;
        m.mode = mode;
        m.trials = n;
        m.active_elements = rows * cols;
        m.user_rates.assign(static_cast<std::size_t>(k), 0.0);
        for (int user = 0; user < k; ++user)
            m.user_blocked.push_back(user < cfg.blocked_users);
        int outages = 0, misses = 0, false_alarms = 0;
        for (int idx = 0; idx < n * k; ++idx)
        {
            const auto &u = results[static_cast<std::size_t>(idx)];
            m.user_rates[static_cast<std::size_t>(idx % k)] += u.rate / n;
            m.sum_rate += u.rate / n;
            m.reference_sum_rate += u.reference_rate / n;
            outages += u.outage;
            if (mode == ScenarioMode::ris_np)
            {
                misses += u.blocked && !judged[static_cast<std::size_t>(idx)];
                false_alarms += !u.blocked && judged[static_cast<std::size_t>(idx)];
            }
        }
        m.gap = m.reference_sum_rate - m.sum_rate;
        m.outage = static_cast<double>(outages) / (n * k);
        if (cfg.blocked_users > 0)
            m.p_miss = static_cast<double>(misses) / (n * cfg.blocked_users);
        if (cfg.users > cfg.blocked_users)
            m.p_false_alarm = static_cast<double>(false_alarms) / (n * (cfg.users - cfg.blocked_users));
        return m;
    }

    // ------------------------------------------------------------------------
    // Parameter sweeps

    enum class SweepKind
    {
        outage,
        scenario
    };

    struct SweepRow
    {
        double value = 0.0;
        std::vector<std::pair<std::string, double>> metrics;

        double metric(const std::string &name) const
        {
            for (const auto &[k, v] : metrics)
                if (k == name)
                    return v;
            throw InvalidArgument("no metric named '" + name + "'");
        }
    };

    struct SweepSpec
    {
        SweepKind kind = SweepKind::outage;
        BeamPolicy policy = BeamPolicy::adaptive;
        ScenarioMode mode = ScenarioMode::ris_oracle;
    };

    inline std::vector<std::pair<std::string, double>> outage_metrics(const OutageEstimate &e)
    {
        return {{"outage", e.probability},
                {"ci95_lo", e.ci95_lo},
                {"ci95_hi", e.ci95_hi},
                {"mean_rate", e.mean_rate},
                {"served_fraction", e.served_fraction},
                {"active_elements", static_cast<double>(e.active_elements)},
                {"beamwidth_rad", e.beamwidth}};
    }

    inline std::vector<std::pair<std::string, double>> scenario_metrics(const ScenarioMetrics &m)
    {
        std::vector<std::pair<std::string, double>> out = {{"sum_rate", m.sum_rate},
                                                           {"reference_sum_rate", m.reference_sum_rate},
                                                           {"gap", m.gap},
                                                           {"outage", m.outage},
                                                           {"p_miss", m.p_miss},
                                                           {"p_false_alarm", m.p_false_alarm}};
        double blocked = 0.0;
        int nb = 0;
        for (std::size_t i = 0; i < m.user_rates.size(); ++i)
            if (m.user_blocked[i])
                blocked += m.user_rates[i], ++nb;
        out.emplace_back("blocked_user_rate", nb ? blocked / nb : 0.0);
        return out;
    }

    // One run per grid value, all sharing the configured base seed.
    inline std::vector<SweepRow> param_sweep(const ScenarioConfig &cfg, const std::string &parameter,
                                             const std::vector<double> &grid, const SweepSpec &spec = {},
                                             int threads = 0)
    {
        if (!has_config_key(parameter))
            throw InvalidArgument("unknown sweep parameter '" + parameter + "'");
        std::vector<SweepRow> rows;
        for (double v : grid)
        {
            ScenarioConfig c = cfg;
            std::ostringstream text;
            text.precision(17);
            text << v;
            set_config_value(c, parameter, text.str());
            c.validate();
            SweepRow row;
            row.value = v;
            row.metrics = spec.kind == SweepKind::outage ? outage_metrics(estimate_outage(c, spec.policy, c.rng_seed, threads))
                                                         : scenario_metrics(run_scenario(c, spec.mode, threads));
            rows.push_back(std::move(row));
        }
        return rows;
    }
} // namespace risnp

#endif
