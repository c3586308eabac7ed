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

#ifndef RISNP_CORE_HPP
#define RISNP_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace risnp
{
    using cdouble = std::complex<double>;
    using CMatrix = Eigen::MatrixXcd;
    using CVector = Eigen::VectorXcd;
    using RVector = Eigen::VectorXd;

    inline constexpr double pi = std::numbers::pi;
    inline constexpr double speed_of_light = 299792458.0;
    inline constexpr const char *version = "1.0.0";

    // Precondition violations on user-facing inputs.
    class InvalidArgument : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    // The rate objective has no usable gradient at the requested point.
    class GradientUndefined : public std::domain_error
    {
    public:
        using std::domain_error::domain_error;
    };

    // The blockage estimator cannot normalize by the direct-link gain.
    class EstimationUndefined : public std::domain_error
    {
    public:
        using std::domain_error::domain_error;
    };

    inline void require(bool condition, const std::string &message)
    {
        if (!condition)
            throw InvalidArgument(message);
    }

    // splitmix64 finalizer; used to derive per-trial seeds from (base, index)
    // so that results do not depend on execution order.
    inline std::uint64_t mix64(std::uint64_t x)
    {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index)
    {
        return mix64(mix64(base) ^ mix64(index + 0x632BE59BD9B4E019ULL));
    }

    using Rng = std::mt19937_64;

    // Circularly symmetric complex Gaussian with E|z|^2 = variance.
    inline cdouble complex_gaussian(Rng &rng, double variance = 1.0)
    {
        std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
        const double re = normal(rng);
        const double im = normal(rng);
        return {re, im};
    }

    inline double uniform(Rng &rng, double lo, double hi)
    {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    }

    inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
    inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

    inline bool all_finite(const CMatrix &m)
    {
        return m.array().isFinite().all();
    }
} // namespace risnp

#endif
