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

#ifndef RISNP_OPTIMIZER_HPP
#define RISNP_OPTIMIZER_HPP

#include "beamforming.hpp"

#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <vector>

namespace risnp
{
    // ------------------------------------------------------------------------
    // Subspaces

    // Angular sector of the RIS-MS direction and the RIS elements kept active
    // for it. An empty mask means every element is active.
    struct SubspaceSpec
    {
        int index = 1;    // w in 1..W
        int sectors = 1;  // W
        double azimuth_lo = -pi / 2.0;
        double azimuth_hi = pi / 2.0;
        std::vector<char> active;

        bool is_active(Eigen::Index k) const
        {
            return active.empty() || active[static_cast<std::size_t>(k)] != 0;
        }

        int active_count(Eigen::Index n) const
        {
            if (active.empty())
                return static_cast<int>(n);
            return static_cast<int>(std::count(active.begin(), active.end(), 1));
        }
    };

    // Splits [-pi/2, pi/2] into W equal sectors. For W > 1 an element stays
    // active if its response phase varies by at most pi across sector w, so it
    // can be co-phased for every direction in that sector.
    inline SubspaceSpec span_subspace(int index, int sectors, const ArrayGeometry &ris)
    {
        require(sectors >= 1, "sector count must be positive");
        require(index >= 1 && index <= sectors, "sector index must lie in 1..W");
        SubspaceSpec s;
        s.index = index;
        s.sectors = sectors;
        const double width = pi / sectors;
        s.azimuth_lo = -pi / 2.0 + (index - 1) * width;
        s.azimuth_hi = (index == sectors) ? pi / 2.0 : s.azimuth_lo + width;
        if (sectors == 1)
            return s;

        // Range of cos(az) over the sector; cos peaks at az = 0.
        const double c_lo = std::min(std::cos(s.azimuth_lo), std::cos(s.azimuth_hi));
        const double c_hi = (s.azimuth_lo <= 0.0 && s.azimuth_hi >= 0.0)
                                ? 1.0
                                : std::max(std::cos(s.azimuth_lo), std::cos(s.azimuth_hi));
        const double spread = c_hi - c_lo;
        s.active.assign(static_cast<std::size_t>(ris.size()), 0);
        for (int k = 0; k < ris.size(); ++k)
        {
            const int col = (ris.kind == ArrayKind::ula) ? k : k % ris.cols;
            s.active[static_cast<std::size_t>(k)] = (ris.phase_scale() * col * spread <= pi) ? 1 : 0;
        }
        return s;
    }

    // ------------------------------------------------------------------------
    // Projections

    // Closest unit-modulus vector; zero entries and inactive entries map to 1.
    inline PhaseVector project_phase(const PhaseVector &theta, const SubspaceSpec &subspace = {})
    {
        require(subspace.active.empty() || static_cast<Eigen::Index>(subspace.active.size()) == theta.size(),
                "subspace mask does not match the phase vector");
        PhaseVector out(theta.size());
        for (Eigen::Index k = 0; k < theta.size(); ++k)
        {
            const double r = std::abs(theta(k));
            out(k) = (!subspace.is_active(k) || r == 0.0 || !std::isfinite(r)) ? cdouble(1.0, 0.0) : theta(k) / r;
        }
        return out;
    }

    // Euclidean projection of a nonnegative vector onto {x >= 0, sum x <= budget}.
    inline RVector project_capped_simplex(const RVector &v, double budget)
    {
        RVector x = v.cwiseMax(0.0);
        if (x.sum() <= budget)
            return x;
        std::vector<double> s(x.data(), x.data() + x.size());
        std::sort(s.rbegin(), s.rend());
        double acc = 0.0, tau = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k)
        {
            acc += s[k];
            const double t = (acc - budget) / static_cast<double>(k + 1);
            if (k + 1 == s.size() || s[k + 1] <= t)
            {
                tau = t;
                break;
            }
        }
        return (x.array() - tau).cwiseMax(0.0).matrix();
    }

    // Projection onto {G Hermitian PSD, tr G <= budget} in the Frobenius norm.
    inline CMatrix project_gain(const CMatrix &g, double budget)
    {
        require(g.rows() == g.cols(), "gain matrix must be square");
        require(budget >= 0.0 && std::isfinite(budget), "power budget must be finite and nonnegative");
        const CMatrix h = 0.5 * (g + g.adjoint());
        Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
        const RVector lam = project_capped_simplex(es.eigenvalues(), budget);
        CMatrix out = es.eigenvectors() * lam.cast<cdouble>().asDiagonal() * es.eigenvectors().adjoint();
        return 0.5 * (out + out.adjoint());
    }

    // ------------------------------------------------------------------------
    // Rate objective

    // NLoS-weighted channel pieces with the path weights folded in:
    // H(theta) = direct + ris_ms diag(theta) bs_ris.
    struct RateProblem
    {
        CMatrix direct;  // eps * u0 * H_d
        CMatrix ris_ms;  // u1 * H_rms
        CMatrix bs_ris;  // H_bri
        double j0 = 1.0;
        double budget = 1.0;

        static RateProblem from_realization(const ChannelRealization &real, const LinkBudget &lb, double budget,
                                            bool los = false)
        {
            real.validate();
            RateProblem p;
            p.direct = real.epsilon * real.upsilon0(los) * real.h_direct;
            p.ris_ms = real.upsilon1(los) * real.h_ris_ms;
            p.bs_ris = real.h_bs_ris;
            p.j0 = lb.j0(real.h_direct.cols());
            p.budget = budget;
            require(p.j0 > 0.0, "total noise plus interference must be positive");
            return p;
        }

        Eigen::Index n_tx() const { return bs_ris.cols(); }
        Eigen::Index n_ris() const { return bs_ris.rows(); }

        CMatrix channel(const PhaseVector &theta) const
        {
            require(theta.size() == n_ris(), "phase vector length must equal the RIS element count");
            return direct + ris_ms * theta.asDiagonal() * bs_ris;
        }

        // Received power of the two paths (trace reading) over J0.
        double sinr(const PhaseVector &theta, const CMatrix &g) const
        {
            const CMatrix z = ris_ms * theta.asDiagonal() * bs_ris;
            return ((direct * g * direct.adjoint()).trace().real() + (z * g * z.adjoint()).trace().real()) / j0;
        }
    };

    // log2 |det(I + H G H^H / J0)|. Equal to the achievable rate for Hermitian
    // PSD G, and defined for the unconstrained perturbations used by finite
    // differences.
    inline double rate_value(const RateProblem &p, const PhaseVector &theta, const CMatrix &g)
    {
        const CMatrix h = p.channel(theta);
        CMatrix a = h * g * h.adjoint() / p.j0;
        a.diagonal().array() += 1.0;
        const cdouble det = Eigen::PartialPivLU<CMatrix>(a).determinant();
        return std::log(std::abs(det)) / std::log(2.0);
    }

    struct RateGradients
    {
        CVector theta;  // d rate / d conj(theta)
        CMatrix gain;   // d rate / d conj(G), entries treated independently
    };

    // Conjugate Wirtinger gradients, scaled so that |z|^2 has gradient z.
    inline RateGradients rate_gradients(const RateProblem &p, const PhaseVector &theta, const CMatrix &g)
    {
        require(g.rows() == p.n_tx() && g.cols() == p.n_tx(), "gain matrix does not match the transmit dimension");
        const CMatrix h = p.channel(theta);
        CMatrix a = h * g * h.adjoint() / p.j0;
        a.diagonal().array() += 1.0;
        Eigen::PartialPivLU<CMatrix> lu(a);
        const cdouble det = lu.determinant();
        if (!std::isfinite(std::abs(det)) || std::abs(det) < 1e-300)
            throw GradientUndefined("rate objective is singular at this point");
        const CMatrix a_inv = lu.inverse();
        if (!all_finite(a_inv))
            throw GradientUndefined("rate objective is singular at this point");

        const double scale = 1.0 / (p.j0 * std::log(2.0));
        // d rate = 2 Re sum_k c_k d theta_k with c = diag(H_bri G H^H A^-1 H_rms).
        const CMatrix m = g * h.adjoint() * a_inv * p.ris_ms;  // N_t x N_k
        RateGradients out;
        out.theta.resize(p.n_ris());
        for (Eigen::Index k = 0; k < p.n_ris(); ++k)
            out.theta(k) = std::conj(p.bs_ris.row(k).transpose().cwiseProduct(m.col(k)).sum()) * scale;
        out.gain = 0.5 * scale * (h.adjoint() * a_inv * h);
        return out;
    }

    // ------------------------------------------------------------------------
    // Finite differences

    // Plain central differences of a real function of real coordinates.
    inline RVector finite_diff_real(const std::function<double(const RVector &)> &f, const RVector &x, double h)
    {
        require(h > 0.0, "difference step must be positive");
        RVector grad(x.size());
        for (Eigen::Index k = 0; k < x.size(); ++k)
        {
            RVector xp = x, xm = x;
            xp(k) += h;
            xm(k) -= h;
            grad(k) = (f(xp) - f(xm)) / (2.0 * h);
        }
        return grad;
    }

    // Central differences over the real and imaginary part of every entry,
    // combined as (d/dx + j d/dy) / 2 to match the gradient convention.
    inline CVector finite_diff_gradient(const std::function<double(const CVector &)> &f, const CVector &z, double h)
    {
        require(h > 0.0, "difference step must be positive");
        CVector grad(z.size());
        for (Eigen::Index k = 0; k < z.size(); ++k)
        {
            CVector zp = z, zm = z;
            zp(k) += h;
            zm(k) -= h;
            const double dx = (f(zp) - f(zm)) / (2.0 * h);
            zp = z;
            zm = z;
            zp(k) += cdouble(0.0, h);
            zm(k) -= cdouble(0.0, h);
            const double dy = (f(zp) - f(zm)) / (2.0 * h);
            grad(k) = 0.5 * cdouble(dx, dy);
        }
        return grad;
    }

    inline CMatrix finite_diff_gradient(const std::function<double(const CMatrix &)> &f, const CMatrix &z, double h)
    {
        const CVector flat = Eigen::Map<const CVector>(z.data(), z.size());
        const auto wrapped = [&](const CVector &v) { return f(Eigen::Map<const CMatrix>(v.data(), z.rows(), z.cols())); };
        const CVector g = finite_diff_gradient(wrapped, flat, h);
        return Eigen::Map<const CMatrix>(g.data(), z.rows(), z.cols());
    }

    // ------------------------------------------------------------------------
    // Iteration state

    struct LineSearchConfig
    {
        double beta_theta = 0.5;
        double beta_gain = 0.5;
        double tol_theta = 1e-4;
        double tol_gain = 1e-4;
        int max_pullbacks = 40;

        void validate() const
        {
            require(beta_theta > 0.0 && beta_theta < 1.0 && beta_gain > 0.0 && beta_gain < 1.0,
                    "line-search discount must lie in (0, 1)");
            require(tol_theta > 0.0 && tol_theta < 1.0 && tol_gain > 0.0 && tol_gain < 1.0,
                    "line-search tolerance must lie in (0, 1)");
            require(max_pullbacks >= 0, "pullback limit must be nonnegative");
        }
    };

    struct OptimizerState
    {
        PhaseVector theta;
        CMatrix gain;
        CVector momentum_theta;  // eta
        CMatrix momentum_gain;   // chi
        double step_theta = 1.0;
        double step_gain = 1.0;
        int iteration = 0;
        double nu = 0.0;     // theta momentum coefficient
        double delta = 0.0;  // gain momentum coefficient
        double t = 1.0;      // Nesterov sequence
        bool schedule = true;  // advance nu and delta with the Nesterov sequence

        void validate() const
        {
            require(momentum_theta.size() == theta.size(), "momentum shape must match theta");
            require(momentum_gain.rows() == gain.rows() && momentum_gain.cols() == gain.cols(),
                    "momentum shape must match the gain matrix");
            require(step_theta > 0.0 && step_gain > 0.0, "step sizes must be positive");
        }
    };

    inline OptimizerState make_state(const PhaseVector &theta, const CMatrix &gain)
    {
        OptimizerState s;
        s.theta = theta;
        s.gain = gain;
        s.momentum_theta = CVector::Zero(theta.size());
        s.momentum_gain = CMatrix::Zero(gain.rows(), gain.cols());
        return s;
    }

    // Uniform random phases and an isotropic gain matrix at full budget.
    inline OptimizerState initial_state(const RateProblem &p, Rng &rng, const SubspaceSpec &subspace = {})
    {
        PhaseVector theta(p.n_ris());
        for (Eigen::Index k = 0; k < theta.size(); ++k)
            theta(k) = std::polar(1.0, uniform(rng, -pi, pi));
        const CMatrix g = CMatrix::Identity(p.n_tx(), p.n_tx()) * (p.budget / static_cast<double>(p.n_tx()));
        return make_state(project_phase(theta, subspace), g);
    }

    inline void advance_momentum_schedule(OptimizerState &s)
    {
        if (!s.schedule)
            return;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * s.t * s.t));
        s.nu = s.delta = (s.t - 1.0) / t_next;
        s.t = t_next;
    }

    inline void restart_momentum(OptimizerState &s)
    {
        s.momentum_theta.setZero();
        s.momentum_gain.setZero();
        s.t = 1.0;
        if (s.schedule)
            s.nu = s.delta = 0.0;
    }

    // One accelerated projected step with the current step sizes. The
    // gradients are those of the minimized objective (negative rate).
    inline OptimizerState nesterov_step(OptimizerState s, const CVector &grad_theta, const CMatrix &grad_gain,
                                        const SubspaceSpec &subspace, double budget)
    {
        s.validate();
        s.momentum_theta = s.nu * s.momentum_theta - s.step_theta * grad_theta;
        s.theta = project_phase(s.theta + s.momentum_theta, subspace);
        s.momentum_gain = s.delta * s.momentum_gain - s.step_gain * grad_gain;
        s.gain = project_gain(s.gain + s.momentum_gain, budget);
        ++s.iteration;
        advance_momentum_schedule(s);
        return s;
    }

    // ------------------------------------------------------------------------
    // Armijo backtracking

    struct ArmijoResult
    {
        double step = 0.0;
        int pullbacks = 0;
        bool stalled = false;
        double value = 0.0;  // objective at the accepted point
    };

    // Backtracks mu = initial * beta^m until f(x) - f(x+(mu)) >= tol * mu * dir_sq.
    // `evaluate` builds the projected trial point for a step and returns its
    // objective value, and `accept` commits the trial of the accepted step.
    template <class Evaluate, class Accept>
    ArmijoResult armijo_search(double f0, double dir_sq, double initial, double beta, double tol, int max_pullbacks,
                               Evaluate &&evaluate, Accept &&accept)
    {
        ArmijoResult r;
        double mu = initial;
        for (int m = 0; m <= max_pullbacks; ++m, mu *= beta)
        {
            const double f1 = evaluate(mu);
            if (std::isfinite(f1) && f0 - f1 >= tol * mu * dir_sq)
            {
                r.step = mu;
                r.pullbacks = m;
                r.value = f1;
                accept(mu);
                return r;
            }
        }
        r.step = initial * std::pow(beta, max_pullbacks);
        r.pullbacks = max_pullbacks;
        r.stalled = true;
        r.value = f0;
        return r;
    }

    // Standalone line search along -direction with an optional projection.
    inline ArmijoResult armijo_step(const CVector &x, const CVector &direction,
                                    const std::function<double(const CVector &)> &objective,
                                    const LineSearchConfig &config,
                                    const std::function<CVector(const CVector &)> &project = nullptr,
                                    double initial = 1.0)
    {
        config.validate();
        const double f0 = objective(x);
        auto eval = [&](double mu)
        {
            CVector trial = x - mu * direction;
            if (project)
                trial = project(trial);
            return objective(trial);
        };
        return armijo_search(f0, direction.squaredNorm(), initial, config.beta_theta, config.tol_theta,
                             config.max_pullbacks, eval, [](double) {});
    }

    // ------------------------------------------------------------------------
    // Traces and results

    struct TraceRecord
    {
        int iteration = 0;
        double rate = 0.0;
        double best_rate = 0.0;
        double grad_norm_theta = 0.0;
        double grad_norm_gain = 0.0;
        double step_theta = 0.0;
        double step_gain = 0.0;
        bool stalled = false;
    };

    struct OptimizerTrace
    {
        std::vector<TraceRecord> records;

        void write_csv(std::ostream &os) const
        {
            os << "iteration,rate,grad_norm_theta,grad_norm_gain,step_theta,step_gain\n" << std::setprecision(15);
            for (const auto &r : records)
                os << r.iteration << ',' << r.rate << ',' << r.grad_norm_theta << ',' << r.grad_norm_gain << ','
                   << r.step_theta << ',' << r.step_gain << '\n';
        }

        // First iteration whose rate reaches the given fraction of the final best rate.
        int iterations_to_fraction(double fraction, double initial_rate) const
        {
            if (records.empty())
                return 0;
            const double final_rate = records.back().best_rate;
            const double target = initial_rate + fraction * (final_rate - initial_rate);
            for (const auto &r : records)
                if (r.best_rate >= target)
                    return r.iteration;
            return records.back().iteration;
        }
    };

    struct OptimizerConfig
    {
        LineSearchConfig line_search;
        bool momentum = true;
        double term_tol = 1e-8;  // on |grad_theta(n) - grad_theta(n-1)|^2
        int max_iterations = 5000;
        double sinr_floor = 0.0;  // trial points at or below this SINR are rejected once feasible
    };

    struct OptimizeResult
    {
        PhaseVector theta;
        CMatrix gain;
        double rate = 0.0;
        double initial_rate = 0.0;
        int iterations = 0;
        bool converged = false;
        bool stalled = false;
        bool sinr_feasible = true;
        OptimizerTrace trace;
    };

    namespace detail
    {
        // Removes the radial part of a phase gradient; it is annihilated by the
        // unit-modulus projection anyway.
        inline CVector tangential(const CVector &grad, const PhaseVector &theta)
        {
            CVector out(grad.size());
            for (Eigen::Index k = 0; k < grad.size(); ++k)
                out(k) = grad(k) - std::real(grad(k) * std::conj(theta(k))) * theta(k);
            return out;
        }

        inline CVector masked(CVector v, const SubspaceSpec &s)
        {
            for (Eigen::Index k = 0; k < v.size(); ++k)
                if (!s.is_active(k))
                    v(k) = 0.0;
            return v;
        }
    } // namespace detail

    // Accelerated projected gradient descent on -rate. Each iteration runs an
    // Armijo search on the theta block, then on the gain block at the updated
    // theta. A stalled block search restarts momentum and retries without it;
    // if that also stalls, the block stays put.
    inline OptimizeResult pgd_optimize(const RateProblem &p, OptimizerState state, const SubspaceSpec &subspace,
                                       const OptimizerConfig &config)
    {
        config.line_search.validate();
        require(config.max_iterations >= 0, "iteration cap must be nonnegative");
        state.theta = project_phase(state.theta, subspace);
        state.gain = project_gain(state.gain, p.budget);
        state.schedule = config.momentum;
        if (!config.momentum)
            state.nu = state.delta = 0.0;
        state.validate();

        const auto &ls = config.line_search;
        auto f = [&p](const PhaseVector &th, const CMatrix &g) { return -rate_value(p, th, g); };
        auto feasible = [&](const PhaseVector &th, const CMatrix &g)
        { return config.sinr_floor <= 0.0 || p.sinr(th, g) > config.sinr_floor; };

        OptimizeResult res;
        double fx = f(state.theta, state.gain);
        res.initial_rate = res.rate = -fx;
        res.theta = state.theta;
        res.gain = state.gain;
        bool currently_feasible = feasible(state.theta, state.gain);
        res.sinr_feasible = currently_feasible;

        CVector prev_grad;
        for (int n = 1; n <= config.max_iterations; ++n)
        {
            TraceRecord rec;
            rec.iteration = n;

            // Theta block.
            const auto g1 = rate_gradients(p, state.theta, state.gain);
            const CVector gt = detail::masked(detail::tangential(-g1.theta, state.theta), subspace);
            rec.grad_norm_theta = gt.norm();
            PhaseVector theta_trial;
            CVector eta_trial;
            auto search_theta = [&](double nu)
            {
                auto eval = [&](double mu)
                {
                    eta_trial = nu * state.momentum_theta - mu * gt;
                    theta_trial = project_phase(state.theta + eta_trial, subspace);
                    if (currently_feasible && !feasible(theta_trial, state.gain))
                        return std::numeric_limits<double>::infinity();
                    return f(theta_trial, state.gain);
                };
                auto accept = [&](double)
                {
                    state.momentum_theta = eta_trial;
                    state.theta = theta_trial;
                };
                return armijo_search(fx, gt.squaredNorm(), std::min(1.0, state.step_theta / ls.beta_theta),
                                     ls.beta_theta, ls.tol_theta, ls.max_pullbacks, eval, accept);
            };
            auto at = search_theta(state.nu);
            if (at.stalled && state.nu != 0.0)
            {
                restart_momentum(state);
                at = search_theta(0.0);
            }
            if (!at.stalled)
            {
                fx = at.value;
                state.step_theta = at.step;
            }
            rec.step_theta = at.stalled ? 0.0 : at.step;

            // Gain block at the updated theta.
            const auto g2 = rate_gradients(p, state.theta, state.gain);
            const CMatrix gg = -g2.gain;
            rec.grad_norm_gain = gg.norm();
            CMatrix gain_trial, chi_trial;
            auto search_gain = [&](double delta)
            {
                auto eval = [&](double mu)
                {
                    chi_trial = delta * state.momentum_gain - mu * gg;
                    gain_trial = project_gain(state.gain + chi_trial, p.budget);
                    if (currently_feasible && !feasible(state.theta, gain_trial))
                        return std::numeric_limits<double>::infinity();
                    return f(state.theta, gain_trial);
                };
                auto accept = [&](double)
                {
                    state.momentum_gain = chi_trial;
                    state.gain = gain_trial;
                };
                return armijo_search(fx, gg.squaredNorm(), std::min(1.0, state.step_gain / ls.beta_gain),
                                     ls.beta_gain, ls.tol_gain, ls.max_pullbacks, eval, accept);
            };
            auto ag = search_gain(state.delta);
            if (ag.stalled && state.delta != 0.0)
            {
                restart_momentum(state);
                ag = search_gain(0.0);
            }
            if (!ag.stalled)
            {
                fx = ag.value;
                state.step_gain = ag.step;
            }
            rec.step_gain = ag.stalled ? 0.0 : ag.step;

            ++state.iteration;
            advance_momentum_schedule(state);
            currently_feasible = currently_feasible || feasible(state.theta, state.gain);

            rec.rate = -fx;
            rec.stalled = at.stalled && ag.stalled;
            if (rec.rate > res.rate)
            {
                res.rate = rec.rate;
                res.theta = state.theta;
                res.gain = state.gain;
            }
            rec.best_rate = res.rate;
            res.trace.records.push_back(rec);
            res.iterations = n;

            const bool small_change = prev_grad.size() == gt.size() && (gt - prev_grad).squaredNorm() < config.term_tol;
            prev_grad = gt;
            if (rec.stalled)
            {
                res.stalled = true;
                res.converged = true;
                break;
            }
            if (small_change)
            {
                res.converged = true;
                break;
            }
        }
        res.sinr_feasible = feasible(res.theta, res.gain);
        return res;
    }

    // Alternating optimization baseline: a fixed-step projected gradient
    // update of one block per iteration, theta on odd and G on even iterations.
    inline OptimizeResult ao_baseline(const RateProblem &p, OptimizerState state, int iterations, double step = 0.05,
                                      const SubspaceSpec &subspace = {})
    {
        require(iterations >= 0, "iteration count must be nonnegative");
        require(step > 0.0, "step size must be positive");
        state.theta = project_phase(state.theta, subspace);
        state.gain = project_gain(state.gain, p.budget);

        OptimizeResult res;
        res.initial_rate = res.rate = rate_value(p, state.theta, state.gain);
        res.theta = state.theta;
        res.gain = state.gain;
        const bool has_theta = p.n_ris() > 0;
        for (int n = 1; n <= iterations; ++n)
        {
            TraceRecord rec;
            rec.iteration = n;
            const auto g = rate_gradients(p, state.theta, state.gain);
            if (has_theta && n % 2 == 1)
            {
                const CVector gt = detail::masked(-g.theta, subspace);
                rec.grad_norm_theta = gt.norm();
                rec.step_theta = step;
                state.theta = project_phase(state.theta - step * gt, subspace);
            }
            else
            {
                rec.grad_norm_gain = g.gain.norm();
                rec.step_gain = step;
                state.gain = project_gain(state.gain + step * g.gain, p.budget);
            }
            rec.rate = rate_value(p, state.theta, state.gain);
            if (rec.rate > res.rate)
            {
                res.rate = rec.rate;
                res.theta = state.theta;
                res.gain = state.gain;
            }
            rec.best_rate = res.rate;
            res.trace.records.push_back(rec);
            res.iterations = n;
        }
        return res;
    }
} // namespace risnp

#endif
