// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace samslab {

// A metrics CSV as read back from disk: one numeric column per metric name.
struct MetricsTable {
    std::string label;
    std::string mode;
    std::vector<std::size_t> rounds;
    std::map<std::string, std::vector<double>> columns;
};

MetricsTable read_metrics_csv(const std::filesystem::path& path, std::string label = {});

struct ReportLine {
    std::string section;  // "delta", "final" or "aggregate"
    std::string label;
    std::size_t round = 0;
    std::string metric;
    double value = 0.0;
};

// Runs sharing a label form one seed family. The first family is the baseline:
// "delta" lines hold family-mean minus baseline-mean per round and metric,
// "final" lines the last-round test accuracy of every run, and "aggregate"
// lines the family mean and sample standard deviation of final accuracy and
// last-quarter selected-noise fraction. Throws InputError if round grids differ.
std::vector<ReportLine> compare_runs(const std::vector<MetricsTable>& runs);

std::string report_csv(const std::vector<ReportLine>& lines);

}  // namespace samslab
