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

#ifndef RISNP_CHANNEL_HPP
#define RISNP_CHANNEL_HPP

#include "core.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <ostream>
#include <utility>
#include <vector>

namespace risnp
{
    // ---------------------------------------------------------------------
    // Array geometry and steering vectors
    // ---------------------------------------------------------------------

    enum class ArrayKind
    {
        ula,
        ura
    };

    struct ArrayGeometry
    {
        ArrayKind kind = ArrayKind::ula;
        int rows = 1;          // URA rows; 1 for a ULA
        int cols = 1;          // ULA length or URA columns
        double spacing = 0.5;  // element spacing in wavelengths

        static ArrayGeometry ula(int n, double spacing = 0.5)
        {
            require(n >= 1, "ArrayGeometry: element count must be >= 1");
            require(spacing > 0.0, "ArrayGeometry: spacing must be positive");
            return {ArrayKind::ula, 1, n, spacing};
        }

        static ArrayGeometry ura(int rows, int cols, double spacing = 0.5)
        {
            require(rows >= 1 && cols >= 1, "ArrayGeometry: URA rows and cols must be >= 1");
            require(spacing > 0.0, "ArrayGeometry: spacing must be positive");
            return {ArrayKind::ura, rows, cols, spacing};
        }

        int size() const { return rows * cols; }

        // Phase progression per element relative to the half-wavelength
        // normalization used by the array response (1 at d = lambda/2).
        double phase_scale() const { return 2.0 * spacing; }
    };

    // Per-element phase of the array response. ULA element n: n*cos(az).
    // URA element (i, j), flattened row-major: i*sin(el)*sin(az) + j*cos(az).
    inline double element_phase(const ArrayGeometry &geom, int index, double azimuth, double elevation)
    {
        if (geom.kind == ArrayKind::ula)
            return geom.phase_scale() * index * std::cos(azimuth);
        const int i = index / geom.cols;
        const int j = index % geom.cols;
        return geom.phase_scale() * (i * std::sin(elevation) * std::sin(azimuth) + j * std::cos(azimuth));
    }

    inline CVector steering_vector(const ArrayGeometry &geom, double azimuth, double elevation = 0.0)
    {
        require(std::isfinite(azimuth) && std::isfinite(elevation), "steering_vector: non-finite angle");
        const int n = geom.size();
        const double norm = 1.0 / std::sqrt(static_cast<double>(n));
        CVector a(n);
        for (int k = 0; k < n; ++k)
            a(k) = std::polar(norm, element_phase(geom, k, azimuth, elevation));
        return a;
    }

    // ---------------------------------------------------------------------
    // Clustered channel
    // ---------------------------------------------------------------------

    struct PathCluster
    {
        cdouble gain{1.0, 0.0};
        double aoa_azimuth = 0.0;
        double aoa_elevation = 0.0;
        double aod_azimuth = 0.0;
        double aod_elevation = 0.0;
    };

    // (1/sqrt(L)) * sum_l g_l a_rx(aoa_l) a_tx(aod_l)^H, shape rx x tx.
    inline CMatrix gen_path_channel(const ArrayGeometry &tx_geom, const ArrayGeometry &rx_geom,
                                    const std::vector<PathCluster> &clusters)
    {
        require(!clusters.empty(), "gen_path_channel: cluster list is empty");
        CMatrix h = CMatrix::Zero(rx_geom.size(), tx_geom.size());
        for (const auto &c : clusters)
        {
            const CVector a_rx = steering_vector(rx_geom, c.aoa_azimuth, c.aoa_elevation);
            const CVector a_tx = steering_vector(tx_geom, c.aod_azimuth, c.aod_elevation);
            for (Eigen::Index t = 0; t < a_tx.size(); ++t)
                h.col(t) += (c.gain * std::conj(a_tx(t))) * a_rx;
        }
        return h / std::sqrt(static_cast<double>(clusters.size()));
    }

    // gen_path_channel(tx, rx, clusters) * x without forming the matrix.
    inline CVector apply_path_channel(const ArrayGeometry &tx_geom, const ArrayGeometry &rx_geom,
                                      const std::vector<PathCluster> &clusters, const CVector &x)
    {
        require(!clusters.empty(), "apply_path_channel: cluster list is empty");
        require(x.size() == tx_geom.size(), "apply_path_channel: input length does not match the transmitter");
        CVector y = CVector::Zero(rx_geom.size());
        for (const auto &c : clusters)
        {
            const cdouble w = c.gain * steering_vector(tx_geom, c.aod_azimuth, c.aod_elevation).dot(x);
            y += w * steering_vector(rx_geom, c.aoa_azimuth, c.aoa_elevation);
        }
        return y / std::sqrt(static_cast<double>(clusters.size()));
    }

    using PhaseVector = CVector;

    struct ChannelRealization
    {
        CMatrix h_direct;  // N_r x N_t
        CMatrix h_ris_ms;  // N_r x N_k
        CMatrix h_bs_ris;  // N_k x N_t
        double rho_direct = 1.0;   // direct-link path gain
        double rho_cascade = 1.0;  // cascaded-link path gain
        double epsilon = 1.0;      // blockage loss rate, 0 = fully blocked
        double kappa = 1.0;        // Rician factor

        int n_tx() const { return static_cast<int>(h_direct.cols()); }
        int n_rx() const { return static_cast<int>(h_direct.rows()); }
        int n_ris() const { return static_cast<int>(h_bs_ris.rows()); }

        // Direct-path weight; LoS puts kappa on the direct term, NLoS on the cascade.
        double upsilon0(bool los) const
        {
            return los ? std::sqrt(kappa * rho_direct / (kappa + 1.0))
                       : std::sqrt(rho_direct / (kappa + 1.0));
        }

        double upsilon1(bool los) const
        {
            return los ? std::sqrt(rho_cascade / (kappa + 1.0))
                       : std::sqrt(kappa * rho_cascade / (kappa + 1.0));
        }

        void validate() const
        {
            require(h_ris_ms.rows() == h_direct.rows(), "ChannelRealization: RIS-MS rows must equal N_r");
            require(h_bs_ris.cols() == h_direct.cols(), "ChannelRealization: BS-RIS cols must equal N_t");
            require(h_ris_ms.cols() == h_bs_ris.rows(), "ChannelRealization: RIS dimension mismatch");
            require(epsilon >= 0.0 && epsilon <= 1.0, "ChannelRealization: epsilon outside [0,1]");
            require(kappa >= 0.0, "ChannelRealization: kappa must be nonnegative");
            require(rho_direct >= 0.0 && rho_cascade >= 0.0, "ChannelRealization: negative path gain");
            require(all_finite(h_direct) && all_finite(h_ris_ms) && all_finite(h_bs_ris),
                    "ChannelRealization: non-finite channel entry");
        }
    };

    // Z = H_ris_ms * diag(theta) * H_bs_ris
    inline CMatrix cascaded_channel(const CMatrix &h_ris_ms, const CMatrix &h_bs_ris, const PhaseVector &theta)
    {
        require(theta.size() == h_ris_ms.cols() && theta.size() == h_bs_ris.rows(),
                "cascaded_channel: theta length does not match RIS dimension");
        return (h_ris_ms * theta.asDiagonal()) * h_bs_ris;
    }

    inline CMatrix cascaded_channel(const ChannelRealization &real, const PhaseVector &theta)
    {
        return cascaded_channel(real.h_ris_ms, real.h_bs_ris, theta);
    }

    inline CMatrix compose_effective_channel(const ChannelRealization &real, const PhaseVector &theta, bool los)
    {
        return real.epsilon * real.upsilon0(los) * real.h_direct + real.upsilon1(los) * cascaded_channel(real, theta);
    }

    // ---------------------------------------------------------------------
    // CSI error
    // ---------------------------------------------------------------------

    struct CsiErrorSpec
    {
        double reliability = 1.0;
        std::uint64_t rng_seed = 0;
    };

    // reliability * h + sqrt(1 - reliability^2) * E, E i.i.d. CN(0, 1).
    inline CMatrix inject_csi_error(const CMatrix &h, const CsiErrorSpec &spec)
    {
        require(spec.reliability >= 0.0 && spec.reliability <= 1.0, "inject_csi_error: reliability outside [0,1]");
        if (spec.reliability == 1.0)
            return h;
        Rng rng(spec.rng_seed);
        const double s = std::sqrt(1.0 - spec.reliability * spec.reliability);
        CMatrix out(h.rows(), h.cols());
        for (Eigen::Index c = 0; c < h.cols(); ++c)
            for (Eigen::Index r = 0; r < h.rows(); ++r)
                out(r, c) = spec.reliability * h(r, c) + s * complex_gaussian(rng);
        return out;
    }

    inline double phase_mse(const PhaseVector &theta, const PhaseVector &theta_hat)
    {
        require(theta.size() == theta_hat.size(), "phase_mse: length mismatch");
        if (theta.size() == 0)
            return 0.0;
        return (theta - theta_hat).squaredNorm() / static_cast<double>(theta.size());
    }

    // ---------------------------------------------------------------------
    // Blockage events
    // ---------------------------------------------------------------------

    struct Region
    {
        double x_min = 0.0, y_min = 0.0, x_max = 1.0, y_max = 1.0;
        double area() const { return (x_max - x_min) * (y_max - y_min); }
    };

    struct BlockageEvent
    {
        double x = 0.0;
        double y = 0.0;
        double epsilon = 1.0;
    };

    struct BlockageProcess
    {
        double rate = 10.0;  // events per unit area
        Region region{};
    };

    inline std::vector<BlockageEvent> gen_blockage_events(const BlockageProcess &process, std::uint64_t rng_seed)
    {
        require(process.rate > 0.0, "gen_blockage_events: rate must be positive");
        require(process.region.x_max > process.region.x_min && process.region.y_max > process.region.y_min,
                "gen_blockage_events: degenerate region");
        Rng rng(rng_seed);
        std::poisson_distribution<long> count_dist(process.rate * process.region.area());
        const long count = count_dist(rng);
        std::vector<BlockageEvent> events;
        events.reserve(static_cast<std::size_t>(count));
        for (long k = 0; k < count; ++k)
        {
            BlockageEvent e;
            e.x = uniform(rng, process.region.x_min, process.region.x_max);
            e.y = uniform(rng, process.region.y_min, process.region.y_max);
            e.epsilon = uniform(rng, 0.0, 1.0);
            events.push_back(e);
        }
        return events;
    }

    // Loss rate seen by a link crossed by the first `active` blockers:
    // the strongest (smallest epsilon) blocker dominates. No blockers -> 1.
    inline double blocked_epsilon(const std::vector<BlockageEvent> &events, int active)
    {
        double eps = 1.0;
        const auto n = std::min<std::size_t>(events.size(), static_cast<std::size_t>(std::max(active, 0)));
        for (std::size_t k = 0; k < n; ++k)
            eps = std::min(eps, events[k].epsilon);
        return eps;
    }

    // ---------------------------------------------------------------------
    // Geometry helpers
    // ---------------------------------------------------------------------

    struct AnglePair
    {
        double azimuth = 0.0;
        double elevation = 0.0;
    };

    // Arrival angles at one end of a fixed link map to departure angles at the
    // other end by a mirror about the boresight: both arrays have parallel
    // element ordering and face each other, so local azimuth and elevation flip sign.
    inline AnglePair angle_reciprocity_map(double aoa_azimuth, double aoa_elevation)
    {
        return {-aoa_azimuth, -aoa_elevation};
    }

    struct PathGains
    {
        double direct = 0.0;
        double cascade = 0.0;
    };

    // Friis free-space gains. The cascade uses the product distance
    // d_bs_ris * d_ris_ms scaled by an effective-aperture constant (m^2).
    inline PathGains path_gains(double d_direct, double d_bs_ris, double d_ris_ms, double carrier_hz,
                                double cascade_constant = 1.0)
    {
        require(d_direct > 0.0 && d_bs_ris > 0.0 && d_ris_ms > 0.0, "path_gains: distances must be positive");
        require(carrier_hz > 0.0, "path_gains: carrier must be positive");
        const double lambda = speed_of_light / carrier_hz;
        const double direct = std::pow(lambda / (4.0 * pi * d_direct), 2);
        const double cascade = cascade_constant * std::pow(lambda / (4.0 * pi * d_bs_ris * d_ris_ms), 2);
        return {direct, cascade};
    }

    // ---------------------------------------------------------------------
    // Realization synthesis
    // ---------------------------------------------------------------------

    struct LinkLayout
    {
        ArrayGeometry bs = ArrayGeometry::ula(32);
        ArrayGeometry ms = ArrayGeometry::ula(4);
        ArrayGeometry ris = ArrayGeometry::ura(8, 16);
        int clusters_direct = 1;
        int clusters_bs_ris = 1;
        int clusters_ris_ms = 3;
        AnglePair direct_aod{};       // BS departure toward the MS
        double bs_ris_aod = pi / 4.0; // BS departure toward the RIS
        AnglePair ris_incidence{};    // arrival at the RIS from the BS
        AnglePair ris_to_ms{};        // RIS departure toward the MS (dominant cluster)
        double scatter_power = 0.1;   // power of non-dominant clusters relative to the dominant one
        double rho_direct = 1.0;
        double rho_cascade = 1.0;
        double kappa = 10.0;
        double epsilon = 1.0;
    };

    namespace detail
    {
        inline double random_angle(Rng &rng) { return uniform(rng, -pi / 2.0, pi / 2.0); }
    } // namespace detail

    inline std::vector<PathCluster> draw_direct_clusters(const LinkLayout &layout, Rng &rng)
    {
        std::vector<PathCluster> out;
        for (int l = 0; l < std::max(layout.clusters_direct, 1); ++l)
        {
            PathCluster c;
            c.gain = (l == 0) ? std::polar(1.0, uniform(rng, -pi, pi)) : complex_gaussian(rng, layout.scatter_power);
            c.aoa_azimuth = detail::random_angle(rng);
            c.aod_azimuth = (l == 0) ? layout.direct_aod.azimuth : detail::random_angle(rng);
            out.push_back(c);
        }
        return out;
    }

    inline std::vector<PathCluster> draw_bs_ris_clusters(const LinkLayout &layout, Rng &rng)
    {
        std::vector<PathCluster> out;
        for (int l = 0; l < std::max(layout.clusters_bs_ris, 1); ++l)
        {
            PathCluster c;
            if (l == 0)
            {
                c.gain = std::polar(1.0, uniform(rng, -pi, pi));
                c.aod_azimuth = layout.bs_ris_aod;
                c.aoa_azimuth = layout.ris_incidence.azimuth;
                c.aoa_elevation = layout.ris_incidence.elevation;
            }
            else
            {
                c.gain = complex_gaussian(rng, layout.scatter_power);
                c.aod_azimuth = detail::random_angle(rng);
                c.aoa_azimuth = detail::random_angle(rng);
                c.aoa_elevation = detail::random_angle(rng);
            }
            out.push_back(c);
        }
        return out;
    }

    // RIS-MS clusters; arrival angles follow from departures by reciprocity.
    inline std::vector<PathCluster> draw_ris_ms_clusters(const LinkLayout &layout, Rng &rng)
    {
        std::vector<PathCluster> out;
        for (int l = 0; l < std::max(layout.clusters_ris_ms, 1); ++l)
        {
            PathCluster c;
            AnglePair aod = layout.ris_to_ms;
            if (l == 0)
                c.gain = std::polar(1.0, uniform(rng, -pi, pi));
            else
            {
                c.gain = complex_gaussian(rng, layout.scatter_power);
                const double az = detail::random_angle(rng);
                aod = {az, detail::random_angle(rng)};
            }
            c.aod_azimuth = aod.azimuth;
            c.aod_elevation = aod.elevation;
            const AnglePair aoa = angle_reciprocity_map(aod.azimuth, aod.elevation);
            c.aoa_azimuth = aoa.azimuth;
            c.aoa_elevation = aoa.elevation;
            out.push_back(c);
        }
        return out;
    }

    // One Monte Carlo draw. Every cluster set is normalized by the
    // element counts of both endpoints (per-element unit gain), so the
    // cascade gain scales with the number of active RIS elements.
    inline ChannelRealization draw_realization(const LinkLayout &layout, Rng &rng)
    {
        const auto direct = draw_direct_clusters(layout, rng);
        const auto bs_ris = draw_bs_ris_clusters(layout, rng);
        const auto ris_ms = draw_ris_ms_clusters(layout, rng);

        const double nt = layout.bs.size();
        const double nr = layout.ms.size();
        const double nk = layout.ris.size();

        ChannelRealization real;
        real.h_direct = std::sqrt(nr * nt) * gen_path_channel(layout.bs, layout.ms, direct);
        real.h_bs_ris = std::sqrt(nk * nt) * gen_path_channel(layout.bs, layout.ris, bs_ris);
        real.h_ris_ms = std::sqrt(nr * nk) * gen_path_channel(layout.ris, layout.ms, ris_ms);
        real.rho_direct = layout.rho_direct;
        real.rho_cascade = layout.rho_cascade;
        real.kappa = layout.kappa;
        real.epsilon = layout.epsilon;
        return real;
    }

    // ---------------------------------------------------------------------
    // Export
    // ---------------------------------------------------------------------

    // Row-major CSV, each entry written as a "re,im" pair.
    inline void write_matrix_csv(std::ostream &os, const CMatrix &m)
    {
        os << std::setprecision(17);
        for (Eigen::Index r = 0; r < m.rows(); ++r)
        {
            for (Eigen::Index c = 0; c < m.cols(); ++c)
            {
                if (c)
                    os << ',';
                os << m(r, c).real() << ',' << m(r, c).imag();
            }
            os << '\n';
        }
    }
} // namespace risnp

#endif
