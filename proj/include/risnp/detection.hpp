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

#ifndef RISNP_DETECTION_HPP
#define RISNP_DETECTION_HPP

#include "beamforming.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

namespace risnp
{
    // Delay-gated direct-path samples collected by the MS.
    struct ObservationBatch
    {
        std::vector<CVector> samples;

        void validate() const
        {
            require(!samples.empty(), "observation batch must hold at least one sample");
            for (const auto &y : samples)
                require(y.size() > 0 && y.allFinite(), "observation samples must be finite and nonempty");
        }
    };

    // ------------------------------------------------------------------------
    // Estimation

    // Per-sample blockage estimate (1/u0) sqrt(|y|^2 / tr(H_d G H_d^H)), clamped to [0, 1].
    inline double epsilon_from_sample(const CVector &y, double reference_power, double upsilon0)
    {
        return std::clamp(std::sqrt(y.squaredNorm() / reference_power) / upsilon0, 0.0, 1.0);
    }

    inline double direct_reference_power(const GainMatrix &g, const CMatrix &h_direct)
    {
        require(h_direct.cols() == g.g.rows(), "direct channel and gain matrix dimensions differ");
        const double p = std::abs((h_direct * g.g * h_direct.adjoint()).trace().real());
        if (!(p > 1e-300) || !std::isfinite(p))
            throw EstimationUndefined("direct-link reference power is zero");
        return p;
    }

    inline std::vector<double> estimate_epsilon_samples(const ObservationBatch &batch, const GainMatrix &g,
                                                        const CMatrix &h_direct, double upsilon0)
    {
        batch.validate();
        require(upsilon0 > 0.0 && std::isfinite(upsilon0), "direct-link weight must be positive");
        const double p = direct_reference_power(g, h_direct);
        std::vector<double> out;
        out.reserve(batch.samples.size());
        for (const auto &y : batch.samples)
        {
            require(y.size() == h_direct.rows(), "sample length must equal the receive dimension");
            out.push_back(epsilon_from_sample(y, p, upsilon0));
        }
        return out;
    }

    inline double estimate_epsilon(const ObservationBatch &batch, const GainMatrix &g, const CMatrix &h_direct,
                                   double upsilon0)
    {
        const auto e = estimate_epsilon_samples(batch, g, h_direct, upsilon0);
        return std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
    }

    // y_m = eps * u0 * H_d f + n_m with n_m ~ CN(0, noise_power I).
    inline ObservationBatch synthesize_batch(const CMatrix &h_direct, const CVector &pilot, double upsilon0,
                                             double epsilon, double noise_power, int samples, Rng &rng)
    {
        require(samples >= 1, "batch needs at least one sample");
        require(noise_power >= 0.0, "noise power must be nonnegative");
        const CVector s = epsilon * upsilon0 * (h_direct * pilot);
        ObservationBatch b;
        b.samples.reserve(static_cast<std::size_t>(samples));
        for (int m = 0; m < samples; ++m)
        {
            CVector y = s;
            if (noise_power > 0.0)
                for (Eigen::Index i = 0; i < y.size(); ++i)
                    y(i) += complex_gaussian(rng, noise_power);
            b.samples.push_back(std::move(y));
        }
        return b;
    }

    // ------------------------------------------------------------------------
    // Densities

    // Histogram density on [0, 1] with a small additive floor so that no bin
    // has zero likelihood. The CDF is piecewise linear within bins.
    struct Density
    {
        std::vector<double> pdf;  // per-bin density, integrates to 1

        static Density from_samples(const std::vector<double> &x, int bins = 100, double floor = 1e-6)
        {
            require(bins >= 1, "density needs at least one bin");
            require(!x.empty(), "density needs at least one sample");
            std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
            for (double v : x)
            {
                const int b = std::clamp(static_cast<int>(std::clamp(v, 0.0, 1.0) * bins), 0, bins - 1);
                counts[static_cast<std::size_t>(b)] += 1.0;
            }
            Density d;
            d.pdf.resize(counts.size());
            const double n = static_cast<double>(x.size());
            for (std::size_t b = 0; b < counts.size(); ++b)
                d.pdf[b] = (counts[b] / n) * bins + floor;
            d.normalize();
            return d;
        }

        void normalize()
        {
            const double total = std::accumulate(pdf.begin(), pdf.end(), 0.0) / static_cast<double>(pdf.size());
            for (double &p : pdf)
                p /= total;
        }

        int bins() const { return static_cast<int>(pdf.size()); }
        double width() const { return 1.0 / bins(); }

        double integral() const { return std::accumulate(pdf.begin(), pdf.end(), 0.0) * width(); }

        double density(double x) const
        {
            const int b = std::clamp(static_cast<int>(std::clamp(x, 0.0, 1.0) * bins()), 0, bins() - 1);
            return pdf[static_cast<std::size_t>(b)];
        }

        double cdf(double x) const
        {
            if (x <= 0.0)
                return 0.0;
            if (x >= 1.0)
                return 1.0;
            const double pos = x * bins();
            const int b = std::min(static_cast<int>(pos), bins() - 1);
            double acc = 0.0;
            for (int k = 0; k < b; ++k)
                acc += pdf[static_cast<std::size_t>(k)];
            acc += pdf[static_cast<std::size_t>(b)] * (pos - b);
            return std::min(1.0, acc * width());
        }
    };

    inline double total_variation(const Density &a, const Density &b)
    {
        require(a.bins() == b.bins(), "densities must share the binning");
        double tv = 0.0;
        for (int k = 0; k < a.bins(); ++k)
            tv += std::abs(a.pdf[static_cast<std::size_t>(k)] - b.pdf[static_cast<std::size_t>(k)]);
        return 0.5 * tv * a.width();
    }

    // ------------------------------------------------------------------------
    // Detector model

    enum class Decision
    {
        los,
        nlos,
        boundary
    };

    struct DetectionOutcome
    {
        Decision decision = Decision::los;
        double lrt_value = 0.0;    // geometric mean of the per-sample ratios
        double epsilon_hat = 0.0;  // mean per-sample estimate
    };

    struct DetectorModel
    {
        Density density_h0;  // unblocked
        Density density_h1;  // blocked
        double eps_threshold = 0.0;
        double lrt_threshold = 1.0;
        double alpha = 0.0;
        bool flagged = false;  // requested alpha was not achievable

        static constexpr int lrt_grid = 2000;
        std::vector<double> ratio_table;  // ratio at k / lrt_grid, k = 1..lrt_grid

        // Sorted calibration values of the decision statistic under each
        // hypothesis; empty when the model was built from bare estimates.
        std::vector<double> statistic_h0;
        std::vector<double> statistic_h1;

        // Integrated likelihood ratio F1(x) / F0(x) over [0, x] on a grid. The
        // table holds its strictly decreasing upper envelope, built from x = 1
        // down, so that the ratio test and the threshold test on x agree.
        void build_ratio_table()
        {
            ratio_table.assign(lrt_grid, 0.0);
            for (int k = lrt_grid; k >= 1; --k)
            {
                const double t = static_cast<double>(k) / lrt_grid;
                const double r = density_h1.cdf(t) / std::max(density_h0.cdf(t), 1e-300);
                ratio_table[k - 1] = (k == lrt_grid) ? r : std::max(r, ratio_table[k] * (1.0 + 1e-13));
            }
        }

        double lrt_ratio(double x) const
        {
            require(static_cast<int>(ratio_table.size()) == lrt_grid, "detector model is not prepared");
            const double pos = std::clamp(x, 0.0, 1.0) * lrt_grid;
            if (pos <= 1.0)
                return ratio_table[0];
            const int k = std::min(static_cast<int>(pos), lrt_grid - 1);
            const double frac = pos - k;
            return ratio_table[k - 1] + (ratio_table[std::min(k, lrt_grid - 1)] - ratio_table[k - 1]) * frac;
        }

        // Mean per-sample log ratio, the quantity compared against log(Lambda).
        double log_statistic(const std::vector<double> &per_sample) const
        {
            require(!per_sample.empty(), "decision needs at least one estimate");
            double log_l = 0.0;
            for (double e : per_sample)
                log_l += std::log(lrt_ratio(e));
            return log_l / static_cast<double>(per_sample.size());
        }

        nlohmann::json to_json() const
        {
            return {{"schema", "risnp.detector/1"},
                    {"statistic_h0", statistic_h0},
                    {"statistic_h1", statistic_h1},
                    {"bins", density_h0.bins()},
                    {"density_h0", density_h0.pdf},
                    {"density_h1", density_h1.pdf},
                    {"eps_threshold", eps_threshold},
                    {"lrt_threshold", lrt_threshold},
                    {"alpha", alpha},
                    {"flagged", flagged}};
        }

        static DetectorModel from_json(const nlohmann::json &j)
        {
            require(j.value("schema", "") == "risnp.detector/1", "unrecognized detector schema");
            DetectorModel m;
            m.density_h0.pdf = j.at("density_h0").get<std::vector<double>>();
            m.density_h1.pdf = j.at("density_h1").get<std::vector<double>>();
            m.eps_threshold = j.at("eps_threshold").get<double>();
            m.lrt_threshold = j.at("lrt_threshold").get<double>();
            m.alpha = j.at("alpha").get<double>();
            m.flagged = j.at("flagged").get<bool>();
            m.statistic_h0 = j.value("statistic_h0", std::vector<double>{});
            m.statistic_h1 = j.value("statistic_h1", std::vector<double>{});
            m.validate();
            m.build_ratio_table();
            return m;
        }

        void validate() const
        {
            require(density_h0.bins() > 0 && density_h0.bins() == density_h1.bins(), "densities must share the binning");
            require(std::abs(density_h0.integral() - 1.0) <= 1e-3 && std::abs(density_h1.integral() - 1.0) <= 1e-3,
                    "densities must integrate to one");
            require(eps_threshold >= 0.0 && eps_threshold <= 1.0, "threshold must lie in [0, 1]");
        }
    };

    inline DetectorModel model_from_samples(const std::vector<double> &eps_h0, const std::vector<double> &eps_h1,
                                            int bins = 100)
    {
        DetectorModel m;
        m.density_h0 = Density::from_samples(eps_h0, bins);
        m.density_h1 = Density::from_samples(eps_h1, bins);
        m.build_ratio_table();
        return m;
    }

    // ------------------------------------------------------------------------
    // Calibration scenario

    struct DetectionScenario
    {
        LinkLayout layout;
        int samples = 2;                 // M
        BlockageProcess blockage{10.0, {0.0, 0.0, 1.0, 1.0}};
        int active_blockers = 5;
        double budget = 1.0;             // transmit power

        double nominal_upsilon0() const
        {
            return std::sqrt(layout.kappa * layout.rho_direct / (1.0 + layout.kappa));
        }

        // SNR is the unblocked per-antenna receive SNR of a unit-gain direct path.
        double noise_power(double snr_db) const
        {
            const double u0 = nominal_upsilon0();
            return u0 * u0 * budget * layout.bs.size() / db_to_linear(snr_db);
        }
    };

    struct Trial
    {
        double epsilon = 1.0;      // planted
        double epsilon_hat = 0.0;  // mean estimate
        std::vector<double> per_sample;
    };

    // One detection trial: draw the direct link, plant epsilon (1 under H0,
    // Poisson blockage under H1), observe and estimate.
    inline Trial run_detection_trial(const DetectionScenario &sc, double snr_db, bool blocked, std::uint64_t seed)
    {
        Rng rng(seed);
        auto real = draw_realization(sc.layout, rng);
        const double eps = blocked ? blocked_epsilon(gen_blockage_events(sc.blockage, rng()), sc.active_blockers) : 1.0;
        const Precoder f = steered_beam(sc.layout.bs, sc.layout.direct_aod.azimuth, sc.layout.direct_aod.elevation,
                                        sc.budget);
        const GainMatrix g = transmit_covariance(f);
        const double u0 = real.upsilon0(true);
        const auto batch = synthesize_batch(real.h_direct, f.f.col(0), u0, eps, sc.noise_power(snr_db), sc.samples, rng);
        Trial t;
        t.epsilon = eps;
        t.per_sample = estimate_epsilon_samples(batch, g, real.h_direct, u0);
        t.epsilon_hat = std::accumulate(t.per_sample.begin(), t.per_sample.end(), 0.0) / t.per_sample.size();
        return t;
    }

    inline std::vector<Trial> run_detection_trials(const DetectionScenario &sc, double snr_db, bool blocked, int n,
                                                   std::uint64_t seed)
    {
        std::vector<Trial> out;
        out.reserve(static_cast<std::size_t>(n));
        const std::uint64_t stream = derive_seed(seed, blocked ? 1 : 0);
        for (int i = 0; i < n; ++i)
            out.push_back(run_detection_trial(sc, snr_db, blocked, derive_seed(stream, static_cast<std::uint64_t>(i))));
        return out;
    }

    inline std::vector<double> epsilon_hats(const std::vector<Trial> &trials)
    {
        std::vector<double> e;
        e.reserve(trials.size());
        for (const auto &t : trials)
            e.push_back(t.epsilon_hat);
        return e;
    }

    inline DetectorModel calibrate_densities(const DetectionScenario &sc, double snr_db, int n_calib,
                                             std::uint64_t seed, int bins = 100)
    {
        require(n_calib >= 1000, "calibration needs at least 1000 draws per hypothesis");
        const auto h0 = run_detection_trials(sc, snr_db, false, n_calib, seed);
        const auto h1 = run_detection_trials(sc, snr_db, true, n_calib, seed);
        auto model = model_from_samples(epsilon_hats(h0), epsilon_hats(h1), bins);
        for (const auto &t : h0)
            model.statistic_h0.push_back(model.log_statistic(t.per_sample));
        for (const auto &t : h1)
            model.statistic_h1.push_back(model.log_statistic(t.per_sample));
        std::sort(model.statistic_h0.begin(), model.statistic_h0.end());
        std::sort(model.statistic_h1.begin(), model.statistic_h1.end());
        return model;
    }

    // ------------------------------------------------------------------------
    // Thresholds and decisions

    inline constexpr double boundary_tolerance = 1e-9;

    namespace detail
    {
        // Cut c on sorted samples such that the fraction with s >= c - tol
        // (decided or tied NLoS) is at most alpha; ties are never split.
        inline double upper_tail_cut(const std::vector<double> &sorted, double alpha)
        {
            const std::size_t n = sorted.size();
            std::size_t i = n - static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n)));
            while (i > 0 && i < n && sorted[i] - sorted[i - 1] <= 4.0 * boundary_tolerance)
                ++i;
            if (i >= n)
                return sorted.back() + 1.0;
            if (i == 0)
                return sorted.front() - 1.0;
            return 0.5 * (sorted[i - 1] + sorted[i]);
        }

        inline double tail_fraction(const std::vector<double> &sorted, double cut)
        {
            const auto it = std::lower_bound(sorted.begin(), sorted.end(), cut - boundary_tolerance);
            return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
        }
    } // namespace detail

    // Sets eps_threshold so that the H0 histogram mass of [0, eps_th] equals
    // alpha. Lambda is the H0 upper alpha-quantile of the combined statistic
    // when calibration statistics are present, else the ratio at eps_th; the
    // two agree for single-sample batches.
    inline DetectorModel threshold_for_alpha(DetectorModel model, double alpha)
    {
        require(std::isfinite(alpha), "alpha must be finite");
        model.flagged = false;
        if (alpha >= 1.0 || alpha <= 0.0)
        {
            model.flagged = alpha > 1.0 || alpha < 0.0;
            model.eps_threshold = alpha >= 1.0 ? 1.0 : 0.0;
        }
        else
        {
            double lo = 0.0, hi = 1.0;
            for (int it = 0; it < 100; ++it)
            {
                const double mid = 0.5 * (lo + hi);
                (model.density_h0.cdf(mid) < alpha ? lo : hi) = mid;
            }
            model.eps_threshold = 0.5 * (lo + hi);
        }
        model.alpha = std::clamp(alpha, 0.0, 1.0);
        model.lrt_threshold = model.lrt_ratio(model.eps_threshold);
        if (!model.statistic_h0.empty() && model.alpha > 0.0 && model.alpha < 1.0)
            model.lrt_threshold = std::exp(detail::upper_tail_cut(model.statistic_h0, model.alpha));
        return model;
    }

    inline Decision classify(double lrt_value, double lambda)
    {
        const double diff = std::log(lrt_value) - std::log(lambda);
        if (diff > boundary_tolerance)
            return Decision::nlos;
        if (diff < -boundary_tolerance)
            return Decision::los;
        return Decision::boundary;
    }

    // Product-form LRT over the per-sample estimates, compared in log domain.
    // A boundary outcome is acted on as NLoS by callers.
    inline DetectionOutcome lrt_decide_estimates(const std::vector<double> &per_sample, const DetectorModel &model)
    {
        const double log_l = model.log_statistic(per_sample);
        DetectionOutcome out;
        out.epsilon_hat = std::accumulate(per_sample.begin(), per_sample.end(), 0.0) / per_sample.size();
        out.lrt_value = std::exp(log_l);
        // Ties are judged on the per-sample mean log ratio; the tolerance
        // absorbs the tiny slope that keeps the ratio table strictly decreasing.
        const double diff = log_l - std::log(model.lrt_threshold);
        out.decision = (diff > boundary_tolerance) ? Decision::nlos
                       : (diff < -boundary_tolerance) ? Decision::los
                                                      : Decision::boundary;
        return out;
    }

    inline DetectionOutcome lrt_decide(const ObservationBatch &batch, const DetectorModel &model, const GainMatrix &g,
                                       const CMatrix &h_direct, double upsilon0)
    {
        return lrt_decide_estimates(estimate_epsilon_samples(batch, g, h_direct, upsilon0), model);
    }

    inline bool acts_as_nlos(Decision d) { return d != Decision::los; }

    struct ErrorProbabilities
    {
        double p_d = 0.0;
        double p_fa = 0.0;
    };

    // Masses of the acted-NLoS region, from the calibration statistics when
    // present and from the histograms otherwise.
    inline ErrorProbabilities error_probabilities(const DetectorModel &model)
    {
        if (!model.statistic_h0.empty() && !model.statistic_h1.empty() && model.alpha > 0.0 && model.alpha < 1.0)
        {
            const double cut = std::log(model.lrt_threshold);
            return {detail::tail_fraction(model.statistic_h1, cut), detail::tail_fraction(model.statistic_h0, cut)};
        }
        return {model.density_h1.cdf(model.eps_threshold), model.density_h0.cdf(model.eps_threshold)};
    }

    // ------------------------------------------------------------------------
    // ROC

    struct RocPoint
    {
        double threshold = 0.0;
        double p_fa = 0.0;
        double p_d = 0.0;
    };

    // Empirical ROC of the rule "NLoS iff eps_hat <= threshold", swept over
    // every distinct statistic value; runs from (0, 0) to (1, 1).
    inline std::vector<RocPoint> empirical_roc(std::vector<double> h0, std::vector<double> h1)
    {
        require(!h0.empty() && !h1.empty(), "ROC needs samples under both hypotheses");
        std::sort(h0.begin(), h0.end());
        std::sort(h1.begin(), h1.end());
        std::vector<double> thresholds(h0);
        thresholds.insert(thresholds.end(), h1.begin(), h1.end());
        std::sort(thresholds.begin(), thresholds.end());
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

        const double n0 = static_cast<double>(h0.size()), n1 = static_cast<double>(h1.size());
        std::vector<RocPoint> roc;
        roc.push_back({-1.0, 0.0, 0.0});
        for (double t : thresholds)
        {
            const auto c0 = std::upper_bound(h0.begin(), h0.end(), t) - h0.begin();
            const auto c1 = std::upper_bound(h1.begin(), h1.end(), t) - h1.begin();
            roc.push_back({t, c0 / n0, c1 / n1});
        }
        return roc;
    }

    // Smallest false-alarm rate on the curve that reaches the detection target.
    inline double pfa_at_pd(const std::vector<RocPoint> &roc, double p_d)
    {
        double best = 1.0;
        for (const auto &p : roc)
            if (p.p_d >= p_d)
                best = std::min(best, p.p_fa);
        return best;
    }

    // Detection rate of the curve at a given false-alarm rate (step interpolation).
    inline double pd_at_pfa(const std::vector<RocPoint> &roc, double p_fa)
    {
        double best = 0.0;
        for (const auto &p : roc)
            if (p.p_fa <= p_fa)
                best = std::max(best, p.p_d);
        return best;
    }

    struct RocCurve
    {
        double snr_db = 0.0;
        std::vector<RocPoint> points;
    };

    // n_points > 0 thins each curve to that many evenly spaced points (endpoints kept).
    inline std::vector<RocCurve> roc_sweep(const DetectionScenario &sc, const std::vector<double> &snr_list,
                                           int n_points, int n_trials, std::uint64_t seed)
    {
        require(n_trials >= 1000, "ROC sweep needs at least 1000 trials per hypothesis");
        std::vector<RocCurve> out;
        for (std::size_t s = 0; s < snr_list.size(); ++s)
        {
            const std::uint64_t stream = derive_seed(seed, s);
            auto full = empirical_roc(epsilon_hats(run_detection_trials(sc, snr_list[s], false, n_trials, stream)),
                                      epsilon_hats(run_detection_trials(sc, snr_list[s], true, n_trials, stream)));
            RocCurve c{snr_list[s], {}};
            if (n_points <= 1 || static_cast<std::size_t>(n_points) >= full.size())
                c.points = std::move(full);
            else
                for (int k = 0; k < n_points; ++k)
                    c.points.push_back(full[static_cast<std::size_t>(
                        std::llround(static_cast<double>(k) * (full.size() - 1) / (n_points - 1)))]);
            out.push_back(std::move(c));
        }
        return out;
    }
} // namespace risnp

#endif
