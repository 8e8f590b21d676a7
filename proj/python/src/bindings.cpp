// Copyright (c) 2026, The samslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "samslab/dpo.hpp"
#include "samslab/errors.hpp"
#include "samslab/harness/checkpoint.hpp"
#include "samslab/harness/config.hpp"
#include "samslab/harness/dataset.hpp"
#include "samslab/harness/trainer.hpp"
#include "samslab/policy.hpp"
#include "samslab/rewards.hpp"
#include "samslab/scheduler/scheduler.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

namespace py = pybind11;
using namespace samslab;

namespace {

std::vector<SampleSignal> signals_of(const std::vector<double>& margins, const std::vector<double>& chosen_logps) {
    if (margins.size() != chosen_logps.size()) throw ShapeError("margins and chosen_logps differ in length");
    std::vector<SampleSignal> out(margins.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {static_cast<SampleId>(i), margins[i], chosen_logps[i]};
    return out;
}

py::dict row_dict(const MetricRow& r) {
    py::dict d;
    d["round"] = r.round;
    d["mode"] = std::string(mode_name(r.mode));
    d["mean_batch_dpo_loss"] = r.mean_batch_dpo_loss;
    d["test_accuracy"] = r.test_accuracy;
    d["mean_chosen_reward"] = r.mean_chosen_reward;
    d["mean_chosen_logp"] = r.mean_chosen_logp;
    d["batch_level_reward"] = r.batch_level_reward;
    d["mean_combined_reward"] = r.mean_combined_reward;
    d["selected_noise_fraction"] = r.selected_noise_fraction;
    d["wall_clock_ms"] = r.wall_clock_ms;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Preference optimization with learned sample scheduling";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<LifecycleError>(m, "LifecycleError", PyExc_RuntimeError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    // Reward signals and selection.
    m.def("sigmoid", &sigmoid, py::arg("x"));
    m.def(
        "minmax_normalize", [](const std::vector<double>& v) { return minmax_normalize(v); }, py::arg("values"));
    m.def(
        "batch_reward",
        [](const std::vector<double>& prev, const std::vector<double>& curr) {
            return batch_reward({0, prev}, {1, curr});
        },
        py::arg("prev_losses"), py::arg("curr_losses"),
        "Normalized decrease of the mean exponentiated loss between two batches, in [-1, 1].");
    m.def(
        "sample_rewards",
        [](const std::vector<double>& margins, const std::vector<double>& chosen_logps) {
            return sample_rewards(signals_of(margins, chosen_logps));
        },
        py::arg("margins"), py::arg("chosen_logps"));
    m.def("combined_reward", &combined_reward, py::arg("batch_reward"), py::arg("sample_reward"), py::arg("gamma"));
    m.def("dpo_loss", &dpo_loss, py::arg("beta"), py::arg("policy_chosen"), py::arg("policy_rejected"),
          py::arg("ref_chosen"), py::arg("ref_rejected"));
    m.def(
        "select_top_k", [](const std::vector<double>& scores, std::size_t k) { return select_top_k(scores, k); },
        py::arg("scores"), py::arg("k"));

    // Data.
    py::class_<PreferenceSample>(m, "PreferenceSample")
        .def(py::init<>())
        .def_readwrite("id", &PreferenceSample::id)
        .def_readwrite("prompt", &PreferenceSample::prompt)
        .def_readwrite("chosen", &PreferenceSample::chosen)
        .def_readwrite("rejected", &PreferenceSample::rejected)
        .def_readwrite("noise_flag", &PreferenceSample::noise_flag)
        .def_readwrite("difficulty", &PreferenceSample::difficulty)
        .def("__eq__", [](const PreferenceSample& a, const PreferenceSample& b) { return a == b; })
        .def("__repr__", [](const PreferenceSample& s) {
            return "PreferenceSample(id=" + std::to_string(s.id) + ", noise_flag=" + (s.noise_flag ? "True" : "False") +
                   ")";
        });

    py::class_<GeneratorSpec>(m, "GeneratorSpec")
        .def(py::init<>())
        .def_readwrite("feature_dim", &GeneratorSpec::feature_dim)
        .def_readwrite("vocab", &GeneratorSpec::vocab)
        .def_readwrite("prompt_min", &GeneratorSpec::prompt_min)
        .def_readwrite("prompt_max", &GeneratorSpec::prompt_max)
        .def_readwrite("response_min", &GeneratorSpec::response_min)
        .def_readwrite("response_max", &GeneratorSpec::response_max)
        .def_readwrite("interaction", &GeneratorSpec::interaction)
        .def_readwrite("paired_lengths", &GeneratorSpec::paired_lengths)
        .def_readwrite("noise_rate", &GeneratorSpec::noise_rate)
        .def_readwrite("train_size", &GeneratorSpec::train_size)
        .def_readwrite("test_size", &GeneratorSpec::test_size)
        .def_readwrite("seed", &GeneratorSpec::seed);

    m.def(
        "generate_dataset",
        [](const GeneratorSpec& spec) {
            GeneratedData d = generate_dataset(spec);
            return py::make_tuple(std::move(d.train), std::move(d.test));
        },
        py::arg("spec"), "Returns (train, test) lists of PreferenceSample.");
    m.def("read_dataset", &read_dataset, py::arg("path"));
    m.def("write_dataset", &write_dataset, py::arg("path"), py::arg("samples"));

    // Configuration and training.
    m.def(
        "default_config_json", [] { return run_config_to_json(RunConfig{}); },
        "JSON text of the default run configuration.");
    m.def(
        "normalize_config_json",
        [](const std::string& text) {
            const RunConfig c = run_config_from_json(text);
            validate(c);
            return run_config_to_json(c);
        },
        py::arg("text"), "Parses, validates and re-serializes a run configuration.");

    m.def(
        "train",
        [](const std::string& config_json, const std::vector<PreferenceSample>& train,
           const std::vector<PreferenceSample>& test) {
            const RunConfig c = run_config_from_json(config_json);
            TrainingResult r;
            {
                py::gil_scoped_release release;
                r = run_training(c, train, test);
            }
            py::list rows;
            for (const auto& row : r.rows) rows.append(row_dict(row));
            py::dict out;
            out["rows"] = rows;
            out["final_test_accuracy"] = r.final_test_accuracy;
            out["last_quartile_noise_fraction"] = last_quartile_noise_fraction(r.rows);
            out["policy_fingerprints"] = r.policy_fingerprints;
            out["encoder_fingerprints"] = r.encoder_fingerprints;
            out["selections"] = r.selections;
            out["ragged_rounds"] = r.ragged_rounds;
            out["metrics_csv"] = [&] {
                std::string csv = metrics_csv_header() + "\n";
                for (const auto& row : r.rows) csv += metrics_csv_line(row) + "\n";
                return csv;
            }();
            out["summary_json"] = training_summary_json(c, r);
            return out;
        },
        py::arg("config_json"), py::arg("train"), py::arg("test"),
        "Runs DPO training; returns metrics rows and run fingerprints.");

    m.def(
        "evaluate_checkpoints",
        [](const std::string& policy_path, const std::string& reference_path, const std::vector<PreferenceSample>& test,
           double beta) {
            const auto p = policy_from_checkpoint(read_checkpoint(policy_path));
            const auto ref = policy_from_checkpoint(read_checkpoint(reference_path));
            const EvaluationSummary s = evaluate_policy(p, ref, test, beta);
            py::dict d;
            d["samples"] = s.samples;
            d["test_accuracy"] = s.test_accuracy;
            d["mean_loss"] = s.mean_loss;
            d["mean_margin"] = s.mean_margin;
            d["mean_chosen_reward"] = s.mean_chosen_reward;
            d["mean_chosen_logp"] = s.mean_chosen_logp;
            return d;
        },
        py::arg("policy"), py::arg("reference"), py::arg("test"), py::arg("beta") = 0.1);
}
