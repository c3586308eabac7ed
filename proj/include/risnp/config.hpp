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

#ifndef RISNP_CONFIG_HPP
#define RISNP_CONFIG_HPP

#include "core.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace risnp
{
    // Scenario parameters. Defaults describe the reference deployment: a
    // 32x64 RIS at 100 m and 45 degrees from a 32-antenna BS at 28 GHz.
    struct ScenarioConfig
    {
        // Radio
        double carrier_hz = 28e9;
        double bandwidth_hz = 100e6;
        double noise_figure_db = 5.0;
        double interference = 0.0;  // other-user power inside J0 (W)

        // Arrays
        int n_tx = 32;
        int n_rx = 4;
        int ris_rows = 32;
        int ris_cols = 64;
        int active_ris_elements = 2048;

        // Geometry and propagation
        double d_bs_ris_m = 100.0;
        double bs_ris_angle_deg = 45.0;
        double d_ris_ms_m = 30.0;
        double kappa = 10.0;
        double fspl_cascade_constant = 1e-3;  // m^2, effective aperture product of the cascade
        double scatter_power = 0.1;
        int clusters_ris_ms = 3;

        // Detection
        double snr_db = 10.0;
        double alpha = 0.05;
        double blockage_rate = 10.0;
        int detection_samples = 2;
        int calib_trials = 2000;

        // Outage and beamwidth control
        double gamma_th = 1.0;        // linear SINR, 1 bit/s/Hz
        double omega_tot = 1.0;       // transmit power budget (W)
        double csi_reliability = 0.85;
        double phase_mse_max = 1.0;
        double mobility_m = 3.0;      // MS displacement between training and data
        int pilot_elements = 16;

        // Multi-user runs
        int users = 4;
        int blocked_users = 2;
        int scenario_trials = 20;

        // Monte Carlo
        int n_trials = 10000;
        std::uint64_t rng_seed = 1;

        double noise_power() const
        {
            // kTB at 290 K plus the receiver noise figure.
            return 1.380649e-23 * 290.0 * bandwidth_hz * db_to_linear(noise_figure_db);
        }

        int ris_size() const { return ris_rows * ris_cols; }

        void validate() const;
    };

    namespace detail
    {
        using FieldPtr = std::variant<double ScenarioConfig::*, int ScenarioConfig::*, std::uint64_t ScenarioConfig::*>;

        struct FieldInfo
        {
            const char *name;
            FieldPtr ptr;
        };

        inline const std::vector<FieldInfo> &config_fields()
        {
            using C = ScenarioConfig;
            static const std::vector<FieldInfo> fields = {
                {"carrier_hz", &C::carrier_hz},
                {"bandwidth_hz", &C::bandwidth_hz},
                {"noise_figure_db", &C::noise_figure_db},
                {"interference", &C::interference},
                {"n_tx", &C::n_tx},
                {"n_rx", &C::n_rx},
                {"ris_rows", &C::ris_rows},
                {"ris_cols", &C::ris_cols},
                {"active_ris_elements", &C::active_ris_elements},
                {"d_bs_ris_m", &C::d_bs_ris_m},
                {"bs_ris_angle_deg", &C::bs_ris_angle_deg},
                {"d_ris_ms_m", &C::d_ris_ms_m},
                {"kappa", &C::kappa},
                {"fspl_cascade_constant", &C::fspl_cascade_constant},
                {"scatter_power", &C::scatter_power},
                {"clusters_ris_ms", &C::clusters_ris_ms},
                {"snr_db", &C::snr_db},
                {"alpha", &C::alpha},
                {"blockage_rate", &C::blockage_rate},
                {"detection_samples", &C::detection_samples},
                {"calib_trials", &C::calib_trials},
                {"gamma_th", &C::gamma_th},
                {"omega_tot", &C::omega_tot},
                {"csi_reliability", &C::csi_reliability},
                {"phase_mse_max", &C::phase_mse_max},
                {"mobility_m", &C::mobility_m},
                {"pilot_elements", &C::pilot_elements},
                {"users", &C::users},
                {"blocked_users", &C::blocked_users},
                {"scenario_trials", &C::scenario_trials},
                {"n_trials", &C::n_trials},
                {"rng_seed", &C::rng_seed},
            };
            return fields;
        }

        inline const FieldInfo *find_field(std::string_view name)
        {
            for (const auto &f : config_fields())
                if (name == f.name)
                    return &f;
            return nullptr;
        }

        inline std::string_view trim(std::string_view s)
        {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string_view::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        }

        template <class T>
        bool parse_number(std::string_view text, T &out)
        {
            const char *first = text.data(), *last = text.data() + text.size();
            if (first != last && *first == '+')
                ++first;
            const auto [ptr, ec] = std::from_chars(first, last, out);
            return ec == std::errc() && ptr == last;
        }
    } // namespace detail

    inline std::vector<std::string> config_keys()
    {
        std::vector<std::string> keys;
        for (const auto &f : detail::config_fields())
            keys.emplace_back(f.name);
        return keys;
    }

    inline bool has_config_key(std::string_view name) { return detail::find_field(name) != nullptr; }

    // Assigns one field from its text form; errors name the key.
    inline void set_config_value(ScenarioConfig &cfg, std::string_view key, std::string_view value)
    {
        const auto *f = detail::find_field(key);
        if (!f)
            throw InvalidArgument("unknown config key '" + std::string(key) + "'");
        const std::string_view v = detail::trim(value);
        bool ok = false;
        std::visit(
            [&](auto ptr) {
                using T = std::remove_reference_t<decltype(cfg.*ptr)>;
                T tmp{};
                ok = detail::parse_number(v, tmp);
                if (ok)
                    cfg.*ptr = tmp;
            },
            f->ptr);
        if (!ok)
            throw InvalidArgument("config key '" + std::string(key) + "': cannot parse value '" + std::string(v) + "'");
    }

    inline double get_config_value(const ScenarioConfig &cfg, std::string_view key)
    {
        const auto *f = detail::find_field(key);
        if (!f)
            throw InvalidArgument("unknown config key '" + std::string(key) + "'");
        return std::visit([&](auto ptr) { return static_cast<double>(cfg.*ptr); }, f->ptr);
    }

    inline void ScenarioConfig::validate() const
    {
        auto check = [](bool ok, const char *key, const char *what) {
            if (!ok)
                throw InvalidArgument(std::string("config key '") + key + "': " + what);
        };
        check(carrier_hz > 0.0, "carrier_hz", "must be positive");
        check(bandwidth_hz > 0.0, "bandwidth_hz", "must be positive");
        check(std::isfinite(noise_figure_db), "noise_figure_db", "must be finite");
        check(interference >= 0.0, "interference", "must be nonnegative");
        check(n_tx >= 1, "n_tx", "must be at least 1");
        check(n_rx >= 1, "n_rx", "must be at least 1");
        check(ris_rows >= 1, "ris_rows", "must be at least 1");
        check(ris_cols >= 1, "ris_cols", "must be at least 1");
        check(active_ris_elements >= 1 && active_ris_elements <= ris_rows * ris_cols, "active_ris_elements",
              "must lie in [1, ris_rows * ris_cols]");
        check(d_bs_ris_m > 0.0, "d_bs_ris_m", "must be positive");
        check(bs_ris_angle_deg > 0.0 && bs_ris_angle_deg < 180.0, "bs_ris_angle_deg", "must lie in (0, 180)");
        check(d_ris_ms_m > 0.0, "d_ris_ms_m", "must be positive");
        check(kappa >= 0.0, "kappa", "must be nonnegative");
        check(fspl_cascade_constant > 0.0, "fspl_cascade_constant", "must be positive");
        check(scatter_power >= 0.0, "scatter_power", "must be nonnegative");
        check(clusters_ris_ms >= 1, "clusters_ris_ms", "must be at least 1");
        check(std::isfinite(snr_db), "snr_db", "must be finite");
        check(alpha > 0.0 && alpha < 1.0, "alpha", "must lie in (0, 1)");
        check(blockage_rate > 0.0, "blockage_rate", "must be positive");
        check(detection_samples >= 1, "detection_samples", "must be at least 1");
        check(calib_trials >= 1000, "calib_trials", "must be at least 1000");
        check(gamma_th >= 0.0 && !std::isnan(gamma_th), "gamma_th", "must be nonnegative");
        check(omega_tot > 0.0, "omega_tot", "must be positive");
        check(csi_reliability >= 0.0 && csi_reliability <= 1.0, "csi_reliability", "must lie in [0, 1]");
        check(phase_mse_max > 0.0, "phase_mse_max", "must be positive");
        check(mobility_m >= 0.0, "mobility_m", "must be nonnegative");
        check(pilot_elements >= 2, "pilot_elements", "must be at least 2");
        check(users >= 1, "users", "must be at least 1");
        check(blocked_users >= 0 && blocked_users <= users, "blocked_users", "must lie in [0, users]");
        check(scenario_trials >= 1, "scenario_trials", "must be at least 1");
        check(n_trials >= 1, "n_trials", "must be at least 1");
    }

    // Flat "key = value" text, '#' starts a comment. Unknown keys, repeated
    // keys and section headers are errors.
    inline ScenarioConfig parse_config(std::istream &in, const std::string &origin = "<config>")
    {
        ScenarioConfig cfg;
        std::vector<std::string> seen;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            std::string_view s = line;
            if (const auto hash = s.find('#'); hash != std::string_view::npos)
                s = s.substr(0, hash);
            s = detail::trim(s);
            if (s.empty())
                continue;
            const auto where = origin + ":" + std::to_string(line_no) + ": ";
            const auto eq = s.find('=');
            if (eq == std::string_view::npos)
                throw InvalidArgument(where + "expected 'key = value', got '" + std::string(s) + "'");
            const std::string key(detail::trim(s.substr(0, eq)));
            if (std::find(seen.begin(), seen.end(), key) != seen.end())
                throw InvalidArgument(where + "config key '" + key + "' given twice");
            try
            {
                set_config_value(cfg, key, s.substr(eq + 1));
            }
            catch (const InvalidArgument &e)
            {
                throw InvalidArgument(where + e.what());
            }
            seen.push_back(key);
        }
        cfg.validate();
        return cfg;
    }

    inline ScenarioConfig load_config(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw InvalidArgument("cannot open config file '" + path + "'");
        return parse_config(in, path);
    }

    inline void write_config(std::ostream &os, const ScenarioConfig &cfg)
    {
        std::ostringstream tmp;
        tmp.precision(17);
        for (const auto &f : detail::config_fields())
        {
            tmp << f.name << " = ";
            std::visit([&](auto ptr) { tmp << cfg.*ptr; }, f.ptr);
            tmp << '\n';
        }
        os << tmp.str();
    }

    inline nlohmann::json config_to_json(const ScenarioConfig &cfg)
    {
        nlohmann::json j = nlohmann::json::object();
        for (const auto &f : detail::config_fields())
            std::visit([&](auto ptr) { j[f.name] = cfg.*ptr; }, f.ptr);
        return j;
    }

    inline ScenarioConfig config_from_json(const nlohmann::json &j)
    {
        require(j.is_object(), "config JSON must be an object");
        ScenarioConfig cfg;
        for (const auto &[key, value] : j.items())
        {
            const auto *f = detail::find_field(key);
            if (!f)
                throw InvalidArgument("unknown config key '" + key + "'");
            std::visit(
                [&](auto ptr) {
                    using T = std::remove_reference_t<decltype(cfg.*ptr)>;
                    cfg.*ptr = value.template get<T>();
                },
                f->ptr);
        }
        cfg.validate();
        return cfg;
    }
} // namespace risnp

#endif
