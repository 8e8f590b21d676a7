// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/harness/dataset.hpp"

#include "samslab/errors.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <random>

namespace samslab {

namespace {

using Json = nlohmann::json;

struct UtilityModel {
    std::vector<std::vector<double>> token_features;  // vocab x feature_dim
    std::vector<double> direction;                    // feature_dim
    std::vector<std::vector<double>> interaction;     // feature_dim x feature_dim
};

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), id};
    return std::mt19937_64(seq);
}

UtilityModel make_model(const GeneratorSpec& spec) {
    auto rng = stream(spec.seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    UtilityModel m;
    m.token_features.assign(spec.vocab, std::vector<double>(spec.feature_dim));
    for (auto& row : m.token_features) {
        for (double& v : row) v = normal(rng);
    }
    m.direction.resize(spec.feature_dim);
    for (double& v : m.direction) v = normal(rng);
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.feature_dim));
    m.interaction.assign(spec.feature_dim, std::vector<double>(spec.feature_dim));
    for (auto& row : m.interaction) {
        for (double& v : row) v = normal(rng) * scale;
    }
    return m;
}

std::vector<double> summed_features(const UtilityModel& m, const TokenSequence& seq) {
    std::vector<double> f(m.direction.size(), 0.0);
    for (TokenId t : seq) {
        const auto& row = m.token_features[static_cast<std::size_t>(t)];
        for (std::size_t k = 0; k < f.size(); ++k) f[k] += row[k];
    }
    return f;
}

double utility(const UtilityModel& m, double interaction, const std::vector<double>& prompt_mean,
               const TokenSequence& response) {
    const auto f = summed_features(m, response);
    double u = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) u += m.direction[k] * f[k];
    if (interaction != 0.0) {
        double q = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            for (std::size_t j = 0; j < f.size(); ++j) q += prompt_mean[i] * m.interaction[i][j] * f[j];
        }
        u += interaction * q;
    }
    return u;
}

TokenSequence draw_sequence(std::mt19937_64& rng, std::size_t vocab, std::size_t lo, std::size_t hi) {
    std::uniform_int_distribution<std::size_t> len(lo, hi);
    std::uniform_int_distribution<TokenId> tok(0, static_cast<TokenId>(vocab) - 1);
    TokenSequence s(len(rng));
    for (auto& t : s) t = tok(rng);
    return s;
}

std::vector<PreferenceSample> draw_split(const GeneratorSpec& spec, const UtilityModel& m, std::mt19937_64& rng,
                                         std::size_t count, SampleId first_id, double noise_rate) {
    std::bernoulli_distribution flip(noise_rate);
    std::vector<PreferenceSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        PreferenceSample s;
        s.id = first_id + static_cast<SampleId>(i);
        s.prompt = draw_sequence(rng, spec.vocab, spec.prompt_min, spec.prompt_max);
        auto prompt_mean = summed_features(m, s.prompt);
        for (double& v : prompt_mean) v /= static_cast<double>(s.prompt.size());
        TokenSequence a;
        TokenSequence b;
        double gap = 0.0;
        do {
            a = draw_sequence(rng, spec.vocab, spec.response_min, spec.response_max);
            const std::size_t len_b = spec.paired_lengths ? a.size() : 0;
            b = spec.paired_lengths ? draw_sequence(rng, spec.vocab, len_b, len_b)
                                    : draw_sequence(rng, spec.vocab, spec.response_min, spec.response_max);
            gap = utility(m, spec.interaction, prompt_mean, a) - utility(m, spec.interaction, prompt_mean, b);
        } while (std::abs(gap) < 1e-9);
        if (gap < 0.0) std::swap(a, b);
        s.difficulty = std::abs(gap);
        s.noise_flag = flip(rng);
        if (s.noise_flag) std::swap(a, b);
        s.chosen = std::move(a);
        s.rejected = std::move(b);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

void validate(const GeneratorSpec& spec) {
    if (spec.vocab < 2) throw ConfigError("generator vocabulary must have at least 2 tokens");
    if (spec.feature_dim == 0) throw ConfigError("generator feature dimension must be at least 1");
    if (spec.prompt_min == 0 || spec.prompt_min > spec.prompt_max) {
        throw ConfigError(fmt::format("invalid prompt length range [{}, {}]", spec.prompt_min, spec.prompt_max));
    }
    if (spec.response_min == 0 || spec.response_min > spec.response_max) {
        throw ConfigError(
            fmt::format("invalid response length range [{}, {}]", spec.response_min, spec.response_max));
    }
    if (!(spec.noise_rate >= 0.0 && spec.noise_rate < 1.0)) {
        throw ConfigError(fmt::format("noise rate {} outside [0, 1)", spec.noise_rate));
    }
    if (!std::isfinite(spec.interaction)) throw ConfigError("generator interaction scale must be finite");
    if (spec.train_size == 0) throw ConfigError("train split must be nonempty");
}

GeneratedData generate_dataset(const GeneratorSpec& spec) {
    validate(spec);
    const UtilityModel model = make_model(spec);
    auto train_rng = stream(spec.seed, 1);
    auto test_rng = stream(spec.seed, 2);
    GeneratedData d;
    d.train = draw_split(spec, model, train_rng, spec.train_size, 0, spec.noise_rate);
    d.test = draw_split(spec, model, test_rng, spec.test_size, static_cast<SampleId>(spec.train_size), 0.0);
    return d;
}

std::string sample_to_json_line(const PreferenceSample& s) {
    Json j;
    j["id"] = s.id;
    j["prompt"] = s.prompt;
    j["chosen"] = s.chosen;
    j["rejected"] = s.rejected;
    j["noise_flag"] = s.noise_flag;
    j["difficulty"] = s.difficulty;
    return j.dump();
}

PreferenceSample sample_from_json_line(const std::string& line) {
    const Json j = Json::parse(line);
    PreferenceSample s;
    s.id = j.at("id").get<SampleId>();
    s.prompt = j.at("prompt").get<TokenSequence>();
    s.chosen = j.at("chosen").get<TokenSequence>();
    s.rejected = j.at("rejected").get<TokenSequence>();
    s.noise_flag = j.at("noise_flag").get<bool>();
    s.difficulty = j.at("difficulty").get<double>();
    return s;
}

void write_dataset(const std::filesystem::path& path, const std::vector<PreferenceSample>& samples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
    for (const auto& s : samples) out << sample_to_json_line(s) << '\n';
    out.flush();
    if (!out) throw IoError(fmt::format("write to {} failed", path.string()));
}

std::vector<PreferenceSample> read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open dataset {}", path.string()));
    std::vector<PreferenceSample> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(sample_from_json_line(line));
        } catch (const nlohmann::json::exception& e) {
            throw InputError(fmt::format("{}:{}: malformed sample: {}", path.string(), line_no, e.what()));
        }
    }
    if (in.bad()) throw IoError(fmt::format("read from {} failed", path.string()));
    return out;
}

}  // namespace samslab
