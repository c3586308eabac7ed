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

#ifndef RISNP_BEAMFORMING_HPP
#define RISNP_BEAMFORMING_HPP

#include "channel.hpp"

#include <iomanip>
#include <ostream>
#include <vector>

namespace risnp
{
    // Transmit covariance G = F F^H with its power budget.
    struct GainMatrix
    {
        CMatrix g;
        double budget = 1.0;

        void validate(double tol = 1e-9) const
        {
            require(g.rows() == g.cols(), "gain matrix must be square");
            require(all_finite(g), "gain matrix has non-finite entries");
            require((g - g.adjoint()).norm() <= 1e-12 * std::max(1.0, g.norm()), "gain matrix is not Hermitian");
            Eigen::SelfAdjointEigenSolver<CMatrix> es(g, Eigen::EigenvaluesOnly);
            require(g.size() == 0 || es.eigenvalues().minCoeff() >= -tol, "gain matrix is not positive semidefinite");
            require(g.trace().real() <= budget + tol, "gain matrix exceeds its power budget");
        }
    };

    struct Precoder
    {
        CMatrix f;  // N_t x N_s
        double budget = 1.0;

        void validate(double tol = 1e-9) const
        {
            require(all_finite(f), "precoder has non-finite entries");
            require(f.squaredNorm() <= budget + tol, "precoder exceeds its power budget");
        }
    };

    struct LinkBudget
    {
        double noise_power = 1.0;   // per receive antenna
        double interference = 0.0;  // summed power of other users

        double j0(Eigen::Index n_tx) const
        {
            require(noise_power >= 0.0 && interference >= 0.0, "link budget terms must be nonnegative");
            return static_cast<double>(n_tx) * noise_power + interference;
        }
    };

    inline GainMatrix transmit_covariance(const Precoder &p)
    {
        p.validate();
        GainMatrix g{p.f * p.f.adjoint(), p.budget};
        g.g = 0.5 * (g.g + g.g.adjoint()).eval();
        return g;
    }

    // How the N_r x N_r received signal matrix is reduced to a scalar power.
    enum class SinrMeasure
    {
        trace,
        determinant
    };

    inline double matrix_power(const CMatrix &m, SinrMeasure measure)
    {
        if (measure == SinrMeasure::trace)
            return std::abs(m.trace().real());
        return std::abs(m.determinant());
    }

    inline double sinr(const ChannelRealization &real, const PhaseVector &theta, const GainMatrix &g,
                       const LinkBudget &budget, bool los, SinrMeasure measure = SinrMeasure::trace)
    {
        real.validate();
        require(g.g.rows() == real.h_direct.cols() && g.g.cols() == real.h_direct.cols(),
                "gain matrix does not match the transmit dimension");
        const double j0 = budget.j0(g.g.rows());
        require(j0 > 0.0, "total noise plus interference must be positive");

        const CMatrix z = cascaded_channel(real, theta);
        const double u0 = real.upsilon0(los), u1 = real.upsilon1(los);
        const double direct = matrix_power(real.h_direct * g.g * real.h_direct.adjoint(), measure);
        const double reflected = matrix_power(z * g.g * z.adjoint(), measure);
        return (real.epsilon * real.epsilon * u0 * u0 * direct + u1 * u1 * reflected) / j0;
    }

    // log2 det(I + H G H^H / J0), via a Cholesky factor of the Hermitian PD argument.
    inline double achievable_rate(const CMatrix &h_eff, const GainMatrix &g, const LinkBudget &budget)
    {
        require(h_eff.cols() == g.g.rows(), "channel and gain matrix dimensions differ");
        const double j0 = budget.j0(g.g.rows());
        require(j0 > 0.0, "total noise plus interference must be positive");
        CMatrix a = h_eff * g.g * h_eff.adjoint() / j0;
        a = 0.5 * (a + a.adjoint()).eval();
        a.diagonal().array() += 1.0;
        Eigen::LLT<CMatrix> llt(a);
        double logdet = 0.0;
        if (llt.info() == Eigen::Success)
        {
            for (Eigen::Index i = 0; i < a.rows(); ++i)
                logdet += 2.0 * std::log(std::real(llt.matrixL()(i, i)));
        }
        else
        {
            Eigen::SelfAdjointEigenSolver<CMatrix> es(a, Eigen::EigenvaluesOnly);
            for (Eigen::Index i = 0; i < a.rows(); ++i)
                logdet += std::log(std::max(es.eigenvalues()(i), 1.0));
        }
        return std::max(0.0, logdet / std::log(2.0));
    }

    inline double sum_rate(const std::vector<double> &rates_los, const std::vector<double> &rates_nlos)
    {
        double s = 0.0;
        for (double r : rates_los)
            s += r;
        for (double r : rates_nlos)
            s += r;
        return s;
    }

    // ------------------------------------------------------------------------
    // Beam patterns

    enum class PatternCut
    {
        azimuth,   // scan azimuth, elevation held fixed
        elevation  // scan elevation, azimuth held fixed
    };

    // |a(angle)^H w|^2 with a unit-norm steering vector.
    inline double beam_gain(const ArrayGeometry &geom, const CVector &weights, double azimuth, double elevation = 0.0)
    {
        require(weights.size() == geom.size(), "weight vector length must equal the element count");
        return std::norm(steering_vector(geom, azimuth, elevation).dot(weights));
    }

    struct BeamwidthResult
    {
        double width = 0.0;    // radians
        double lower = 0.0;    // -3 dB crossing below the peak
        double upper = 0.0;    // -3 dB crossing above the peak
        bool flagged = false;  // at least one side had no crossing within the scan range
    };

    namespace detail
    {
        // Walks away from the peak in fixed steps until the pattern drops below
        // half its peak value, then bisects the bracketing step.
        template <class Pattern>
        double find_crossing(const Pattern &p, double peak, double half, double direction, double step, bool &found)
        {
            const double reach = pi / 2.0;
            double prev = peak;
            for (double off = step; off <= reach + 1e-15; off += step)
            {
                const double x = peak + direction * off;
                if (p(x) < half)
                {
                    double lo = prev, hi = x;
                    for (int it = 0; it < 60; ++it)
                    {
                        const double mid = 0.5 * (lo + hi);
                        (p(mid) < half ? hi : lo) = mid;
                    }
                    found = true;
                    return 0.5 * (lo + hi);
                }
                prev = x;
            }
            found = false;
            return peak + direction * reach;
        }
    } // namespace detail

    inline constexpr double default_hpbw_step = 0.005 * pi / 180.0;

    template <class Pattern>
    BeamwidthResult hpbw_of_pattern(const Pattern &pattern, double peak, double step = default_hpbw_step)
    {
        require(std::isfinite(peak), "peak angle must be finite");
        require(step > 0.0 && step <= 0.01 * pi / 180.0, "scan resolution must be at most 0.01 degrees");
        const double half = 0.5 * pattern(peak);
        bool found_lo = false, found_hi = false;
        BeamwidthResult r;
        r.lower = detail::find_crossing(pattern, peak, half, -1.0, step, found_lo);
        r.upper = detail::find_crossing(pattern, peak, half, +1.0, step, found_hi);
        r.width = std::abs(r.upper - r.lower);
        r.flagged = !(found_lo && found_hi);
        return r;
    }

    // Half-power beamwidth of the weighted array along one principal cut.
    inline BeamwidthResult hpbw(const ArrayGeometry &geom, const CVector &weights, double peak,
                                PatternCut cut = PatternCut::azimuth, double fixed_angle = 0.0,
                                double step = default_hpbw_step)
    {
        require(weights.size() == geom.size(), "weight vector length must equal the element count");
        auto pattern = [&](double x)
        {
            return cut == PatternCut::azimuth ? beam_gain(geom, weights, x, fixed_angle)
                                              : beam_gain(geom, weights, fixed_angle, x);
        };
        return hpbw_of_pattern(pattern, peak, step);
    }

    // Broadside HPBW of a uniform n-element line with the given spacing.
    // The pattern is a Dirichlet kernel in u = cos(azimuth), with the same
    // per-element phase 2*spacing*cos(azimuth) as the array response.
    inline BeamwidthResult uniform_line_hpbw(int n, double spacing = 0.5, double step = default_hpbw_step)
    {
        require(n >= 1, "element count must be positive");
        auto pattern = [n, spacing](double az)
        {
            const double psi = spacing * std::cos(az);
            const double den = std::sin(psi);
            if (std::abs(den) < 1e-12)
                return 1.0 * n;
            const double num = std::sin(n * psi);
            return num * num / (den * den) / n;
        };
        return hpbw_of_pattern(pattern, pi / 2.0, step);
    }

    struct ActiveSubarray
    {
        int rows = 1;
        int cols = 1;
        int row_offset = 0;
        int col_offset = 0;
        std::vector<char> mask;  // row-major, 1 = active
        double width = 0.0;      // achieved beamwidth
        bool flagged = false;    // target unreachable, largest subarray returned

        int count() const { return rows * cols; }
    };

    inline ActiveSubarray make_centered_subarray(const ArrayGeometry &geom, int rows, int cols)
    {
        require(rows >= 1 && rows <= geom.rows && cols >= 1 && cols <= geom.cols, "subarray exceeds the array");
        ActiveSubarray s;
        s.rows = rows;
        s.cols = cols;
        s.row_offset = (geom.rows - rows) / 2;
        s.col_offset = (geom.cols - cols) / 2;
        s.mask.assign(static_cast<std::size_t>(geom.size()), 0);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                s.mask[static_cast<std::size_t>((s.row_offset + i) * geom.cols + s.col_offset + j)] = 1;
        return s;
    }

    // Beamwidth of a uniform rows x cols subarray, taken as the wider of the two
    // broadside principal cuts; each cut only sees one array dimension.
    inline double subarray_hpbw(int rows, int cols, double spacing = 0.5)
    {
        return std::max(uniform_line_hpbw(rows, spacing).width, uniform_line_hpbw(cols, spacing).width);
    }

    // Smallest centered subarray whose beamwidth does not exceed the target.
    // Ties on element count prefer the squarer shape.
    inline ActiveSubarray select_active_elements(const ArrayGeometry &ris, double target_hpbw)
    {
        require(std::isfinite(target_hpbw) && target_hpbw > 0.0, "target beamwidth must be positive");
        std::vector<double> row_w(static_cast<std::size_t>(ris.rows) + 1), col_w(static_cast<std::size_t>(ris.cols) + 1);
        for (int n = 1; n <= ris.rows; ++n)
            row_w[n] = uniform_line_hpbw(n, ris.spacing).width;
        for (int n = 1; n <= ris.cols; ++n)
            col_w[n] = uniform_line_hpbw(n, ris.spacing).width;

        int best_r = 0, best_c = 0;
        for (int r = 1; r <= ris.rows; ++r)
            for (int c = 1; c <= ris.cols; ++c)
            {
                if (std::max(row_w[r], col_w[c]) > target_hpbw)
                    continue;
                const bool better = best_r == 0 || r * c < best_r * best_c ||
                                    (r * c == best_r * best_c && std::abs(r - c) < std::abs(best_r - best_c));
                if (better)
                    best_r = r, best_c = c;
            }

        ActiveSubarray s;
        if (best_r == 0)
        {
            s = make_centered_subarray(ris, ris.rows, ris.cols);
            s.flagged = true;
        }
        else
            s = make_centered_subarray(ris, best_r, best_c);
        s.width = std::max(row_w[s.rows], col_w[s.cols]);
        return s;
    }

    // Matched-filter beam toward the target, scaled to the full power budget.
    inline Precoder steered_beam(const ArrayGeometry &geom, double azimuth, double elevation, double budget = 1.0)
    {
        require(budget >= 0.0 && std::isfinite(budget), "power budget must be finite and nonnegative");
        Precoder p;
        p.f = std::sqrt(budget) * steering_vector(geom, azimuth, elevation);
        p.budget = budget;
        return p;
    }

    // Writes angle_deg,gain_db rows for an azimuth sweep from 0 to 180 degrees.
    inline void write_beam_pattern_csv(std::ostream &os, const ArrayGeometry &geom, const CVector &weights,
                                       int points = 1801, double elevation = 0.0)
    {
        require(points >= 2, "pattern needs at least two points");
        os << "angle_deg,gain_db\n" << std::setprecision(15);
        for (int i = 0; i < points; ++i)
        {
            const double deg = 180.0 * i / (points - 1);
            const double gain = beam_gain(geom, weights, deg * pi / 180.0, elevation);
            os << deg << ',' << 10.0 * std::log10(std::max(gain, 1e-300)) << '\n';
        }
    }
} // namespace risnp

#endif
