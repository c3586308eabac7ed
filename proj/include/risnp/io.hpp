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

#ifndef RISNP_IO_HPP
#define RISNP_IO_HPP

#include "config.hpp"
#include "core.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace risnp
{
    inline constexpr const char *toolkit_name = "risnp";
    inline constexpr const char *toolkit_version = "1.0.0";

    class IoError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    using Cell = std::variant<double, std::int64_t, std::string>;

    // A table of results plus free-form summary values.
    struct ResultBundle
    {
        std::string name;
        std::vector<std::string> columns;
        std::vector<std::vector<Cell>> rows;
        nlohmann::json summary = nlohmann::json::object();

        void add_row(std::vector<Cell> row)
        {
            require(row.size() == columns.size(), "result row width does not match the header");
            rows.push_back(std::move(row));
        }

        bool operator==(const ResultBundle &) const = default;
    };

    // Config and seed that regenerate a bundle.
    struct RunInfo
    {
        std::string verb;
        std::uint64_t seed = 0;
        ScenarioConfig config;
    };

    enum class OutputFormat
    {
        csv,
        json
    };

    namespace detail
    {
        // 15 significant digits; integers and text are written verbatim.
        inline std::string format_cell(const Cell &c)
        {
            if (const auto *d = std::get_if<double>(&c))
            {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.15g", *d);
                return buf;
            }
            if (const auto *i = std::get_if<std::int64_t>(&c))
                return std::to_string(*i);
            const auto &s = std::get<std::string>(c);
            if (s.find_first_of(",\"\n") == std::string::npos)
                return s;
            std::string q = "\"";
            for (char ch : s)
                q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            return q + "\"";
        }

        inline nlohmann::json cell_to_json(const Cell &c)
        {
            return std::visit([](const auto &v) { return nlohmann::json(v); }, c);
        }

        inline Cell cell_from_json(const nlohmann::json &j)
        {
            if (j.is_string())
                return j.get<std::string>();
            if (j.is_number_integer())
                return j.get<std::int64_t>();
            return j.get<double>();
        }

        inline std::ofstream open_for_write(const std::filesystem::path &path)
        {
            std::ofstream os(path, std::ios::binary | std::ios::trunc);
            if (!os)
                throw IoError("cannot write '" + path.string() + "'");
            return os;
        }
    } // namespace detail

    inline void write_csv(std::ostream &os, const ResultBundle &b)
    {
        for (std::size_t c = 0; c < b.columns.size(); ++c)
            os << (c ? "," : "") << b.columns[c];
        os << '\n';
        for (const auto &row : b.rows)
        {
            for (std::size_t c = 0; c < row.size(); ++c)
                os << (c ? "," : "") << detail::format_cell(row[c]);
            os << '\n';
        }
    }

    inline nlohmann::json results_to_json(const ResultBundle &b, const RunInfo &run)
    {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto &row : b.rows)
        {
            nlohmann::json r = nlohmann::json::array();
            for (const auto &c : row)
                r.push_back(detail::cell_to_json(c));
            rows.push_back(std::move(r));
        }
        return {{"toolkit", toolkit_name},
                {"version", toolkit_version},
                {"verb", run.verb},
                {"seed", run.seed},
                {"config", config_to_json(run.config)},
                {"name", b.name},
                {"columns", b.columns},
                {"rows", std::move(rows)},
                {"summary", b.summary}};
    }

    inline std::pair<ResultBundle, RunInfo> results_from_json(const nlohmann::json &j)
    {
        require(j.value("toolkit", "") == toolkit_name, "not a risnp result file");
        ResultBundle b;
        b.name = j.at("name").get<std::string>();
        b.columns = j.at("columns").get<std::vector<std::string>>();
        for (const auto &r : j.at("rows"))
        {
            std::vector<Cell> row;
            for (const auto &c : r)
                row.push_back(detail::cell_from_json(c));
            b.add_row(std::move(row));
        }
        b.summary = j.at("summary");
        RunInfo run;
        run.verb = j.at("verb").get<std::string>();
        run.seed = j.at("seed").get<std::uint64_t>();
        run.config = config_from_json(j.at("config"));
        return {std::move(b), std::move(run)};
    }

    inline void emit_results(const ResultBundle &b, OutputFormat format, const std::filesystem::path &path,
                             const RunInfo &run)
    {
        auto os = detail::open_for_write(path);
        if (format == OutputFormat::csv)
            write_csv(os, b);
        else
            os << results_to_json(b, run).dump(2) << '\n';
        os.flush();
        if (!os)
            throw IoError("failed while writing '" + path.string() + "'");
    }

    inline std::pair<ResultBundle, RunInfo> load_results(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open '" + path.string() + "'");
        try
        {
            return results_from_json(nlohmann::json::parse(in));
        }
        catch (const nlohmann::json::exception &e)
        {
            throw IoError("malformed result file '" + path.string() + "': " + e.what());
        }
    }
} // namespace risnp

#endif
