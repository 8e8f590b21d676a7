// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/harness/compare.hpp"

#include "samslab/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace samslab {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InputError(fmt::format("{}:{}: '{}' is not a number", path.string(), line, s));
    }
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double stdev_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double last_quarter_mean(const std::vector<double>& v) {
    const std::size_t count = std::max<std::size_t>(1, v.size() / 4);
    double s = 0.0;
    for (std::size_t i = v.size() - count; i < v.size(); ++i) s += v[i];
    return s / static_cast<double>(count);
}

std::string describe_grid(const std::vector<std::size_t>& rounds) {
    if (rounds.empty()) return "[]";
    return fmt::format("[{}..{}] ({} rounds)", rounds.front(), rounds.back(), rounds.size());
}

}  // namespace

MetricsTable read_metrics_csv(const std::filesystem::path& path, std::string label) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open metrics file {}", path.string()));
    std::string line;
    if (!std::getline(in, line)) throw InputError(fmt::format("{} is empty", path.string()));
    const auto header = split(line);
    if (header.size() < 2 || header[0] != "round" || header[1] != "mode") {
        throw InputError(fmt::format("{}: header must start with round,mode", path.string()));
    }
    MetricsTable t;
    for (std::size_t c = 2; c < header.size(); ++c) t.columns[header[c]];
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw InputError(fmt::format("{}:{}: expected {} columns, got {}", path.string(), line_no, header.size(),
                                         cells.size()));
        }
        t.rounds.push_back(static_cast<std::size_t>(parse_double(cells[0], path, line_no)));
        if (t.mode.empty()) t.mode = cells[1];
        for (std::size_t c = 2; c < header.size(); ++c) {
            t.columns[header[c]].push_back(parse_double(cells[c], path, line_no));
        }
    }
    if (t.rounds.empty()) throw InputError(fmt::format("{} has no rows", path.string()));
    t.label = label.empty() ? t.mode : std::move(label);
    return t;
}

std::vector<ReportLine> compare_runs(const std::vector<MetricsTable>& runs) {
    if (runs.size() < 2) throw InputError("comparison needs at least two metrics files");
    const auto& grid = runs.front().rounds;
    for (const auto& r : runs) {
        if (r.rounds != grid) {
            throw InputError(fmt::format("round grids differ: '{}' has {} but '{}' has {}", runs.front().label,
                                         describe_grid(grid), r.label, describe_grid(r.rounds)));
        }
        if (!r.columns.contains("test_accuracy")) {
            throw InputError(fmt::format("metrics of '{}' lack a test_accuracy column", r.label));
        }
    }

    std::vector<std::string> labels;
    for (const auto& r : runs) {
        if (std::find(labels.begin(), labels.end(), r.label) == labels.end()) labels.push_back(r.label);
    }
    auto family = [&](const std::string& label) {
        std::vector<const MetricsTable*> out;
        for (const auto& r : runs) {
            if (r.label == label) out.push_back(&r);
        }
        return out;
    };

    std::vector<std::string> metrics;
    for (const auto& [name, values] : runs.front().columns) {
        bool shared = true;
        for (const auto& r : runs) shared = shared && r.columns.contains(name);
        if (shared) metrics.push_back(name);
    }

    std::vector<ReportLine> lines;
    // Per-round family means, for the delta section.
    std::map<std::string, std::map<std::string, std::vector<double>>> means;
    for (const auto& label : labels) {
        const auto members = family(label);
        for (const auto& m : metrics) {
            std::vector<double> avg(grid.size(), 0.0);
            for (const auto* r : members) {
                const auto& col = r->columns.at(m);
                for (std::size_t i = 0; i < grid.size(); ++i) avg[i] += col[i];
            }
            for (double& v : avg) v /= static_cast<double>(members.size());
            means[label][m] = std::move(avg);
        }
    }
    const std::string& base = labels.front();
    if (labels.size() == 1) {
        // Every run shares one label: compare each file against the first one.
        for (std::size_t k = 1; k < runs.size(); ++k) {
            for (const auto& m : metrics) {
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    lines.push_back({"delta", fmt::format("{}#{}", runs[k].label, k), grid[i], m,
                                     runs[k].columns.at(m)[i] - runs.front().columns.at(m)[i]});
                }
            }
        }
    } else {
        for (std::size_t l = 1; l < labels.size(); ++l) {
            for (const auto& m : metrics) {
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    lines.push_back({"delta", labels[l], grid[i], m, means[labels[l]][m][i] - means[base][m][i]});
                }
            }
        }
    }

    for (std::size_t k = 0; k < runs.size(); ++k) {
        lines.push_back({"final", fmt::format("{}#{}", runs[k].label, k), grid.back(), "test_accuracy",
                         runs[k].columns.at("test_accuracy").back()});
    }

    for (const auto& label : labels) {
        std::vector<double> finals;
        std::vector<double> noise;
        for (const auto* r : family(label)) {
            finals.push_back(r->columns.at("test_accuracy").back());
            if (r->columns.contains("selected_noise_fraction")) {
                noise.push_back(last_quarter_mean(r->columns.at("selected_noise_fraction")));
            }
        }
        lines.push_back({"aggregate", label, grid.back(), "runs", static_cast<double>(finals.size())});
        lines.push_back({"aggregate", label, grid.back(), "final_test_accuracy_mean", mean_of(finals)});
        lines.push_back({"aggregate", label, grid.back(), "final_test_accuracy_std", stdev_of(finals)});
        if (!noise.empty()) {
            lines.push_back({"aggregate", label, grid.back(), "last_quarter_noise_fraction_mean", mean_of(noise)});
            lines.push_back({"aggregate", label, grid.back(), "last_quarter_noise_fraction_std", stdev_of(noise)});
        }
    }
    return lines;
}

std::string report_csv(const std::vector<ReportLine>& lines) {
    std::string out = "section,label,round,metric,value\n";
    for (const auto& l : lines) {
        out += fmt::format("{},{},{},{},{:.17g}\n", l.section, l.label, l.round, l.metric, l.value);
    }
    return out;
}

}  // namespace samslab
