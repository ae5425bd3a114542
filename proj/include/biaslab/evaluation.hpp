#pragma once

#include <algorithm>
#include <concepts>
#include <cstdio>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "biaslab/error.hpp"
#include "biaslab/metrics.hpp"
#include "biaslab/model.hpp"

namespace biaslab {

/// A test example with the metadata slices are defined over.
struct EvalExample {
    std::string id;
    LabeledExample example;
    std::vector<std::string> tags;

    [[nodiscard]] bool has_tag(std::string_view tag) const {
        return std::find(tags.begin(), tags.end(), tag) != tags.end();
    }
};

struct SliceSuite {
    std::string name;
    std::string tag;
    std::vector<EvalExample> examples;
};

/// Selects every test example carrying `tag`.
inline SliceSuite make_suite(std::string name, std::string tag, std::span<const EvalExample> test) {
    SliceSuite suite{std::move(name), std::move(tag), {}};
    for (const auto &ex : test) {
        if (ex.has_tag(suite.tag)) {
            suite.examples.push_back(ex);
        }
    }
    return suite;
}

struct EvaluationReport {
    std::string model_id;
    std::string dataset_id;
    MetricBundle overall;
    std::map<std::string, MetricBundle> per_slice;
    std::vector<std::string> skipped;  // empty suites
};

template <class M>
concept SequenceScorer = requires(const M &m, const EncodedSequence &s) {
    { m.forward(s) } -> std::convertible_to<double>;
    { m.checksum() } -> std::convertible_to<std::string>;
};

namespace detail {

template <SequenceScorer M>
MetricBundle bundle_for(const M &model, std::span<const EvalExample> examples, double threshold) {
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(examples.size());
    labels.reserve(examples.size());
    for (const auto &ex : examples) {
        scores.push_back(model.forward(ex.example.encoded));
        labels.push_back(to_binary(ex.example.label));
    }
    return compute_metrics(scores, labels, threshold, AucPolicy::absent_if_undefined);
}

}  // namespace detail

/// Overall metrics on `test` plus one bundle per non-empty suite. Suite
/// examples must come from the test set; single-class slices report AUC as
/// absent.
template <SequenceScorer M>
EvaluationReport evaluate_sliced(const M &model, std::span<const SliceSuite> suites, std::span<const EvalExample> test,
                                 std::string dataset_id, double threshold = 0.5) {
    if (test.empty()) {
        fail(ErrorKind::invalid, "test set is empty");
    }
    std::set<std::string> test_ids;
    for (const auto &ex : test) {
        test_ids.insert(ex.id);
    }
    EvaluationReport report;
    report.model_id = model.checksum();
    report.dataset_id = std::move(dataset_id);
    report.overall = detail::bundle_for(model, test, threshold);
    for (const auto &suite : suites) {
        if (report.per_slice.count(suite.name) != 0 ||
            std::find(report.skipped.begin(), report.skipped.end(), suite.name) != report.skipped.end()) {
            fail(ErrorKind::invalid, "duplicate suite name '" + suite.name + "'");
        }
        for (const auto &ex : suite.examples) {
            if (test_ids.count(ex.id) == 0) {
                fail(ErrorKind::invalid, "suite '" + suite.name + "' contains '" + ex.id + "' outside the test set");
            }
        }
        if (suite.examples.empty()) {
            report.skipped.push_back(suite.name);
            continue;
        }
        report.per_slice.emplace(suite.name, detail::bundle_for(model, suite.examples, threshold));
    }
    return report;
}

struct ComparisonTable {
    std::string dataset_id;
    std::vector<EvaluationReport> rows;  // sorted by overall F1 desc, then model id
    std::vector<std::string> slice_names;

    [[nodiscard]] std::string render() const {
        const auto cell = [](const std::optional<double> &v) {
            if (!v) return std::string("-");
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4f", *v);
            return std::string(buf);
        };
        std::string out = "model            acc     f1      auc";
        for (const auto &s : slice_names) {
            out += "  f1[" + s + "]";
        }
        out += '\n';
        for (const auto &r : rows) {
            out += r.model_id + " " + cell(r.overall.accuracy) + "  " + cell(r.overall.f1) + "  " + cell(r.overall.auc);
            for (const auto &s : slice_names) {
                const auto it = r.per_slice.find(s);
                out += "  " + (it == r.per_slice.end() ? std::string("-") : cell(it->second.f1));
            }
            out += '\n';
        }
        return out;
    }
};

inline ComparisonTable compare_models(std::span<const EvaluationReport> reports) {
    ComparisonTable table;
    if (reports.empty()) {
        return table;
    }
    table.dataset_id = reports.front().dataset_id;
    std::set<std::string> slices;
    for (const auto &r : reports) {
        if (r.dataset_id != table.dataset_id) {
            fail(ErrorKind::invalid, "cannot compare reports over different datasets ('" + table.dataset_id +
                                         "' vs '" + r.dataset_id + "')");
        }
        for (const auto &[name, bundle] : r.per_slice) {
            slices.insert(name);
        }
        table.rows.push_back(r);
    }
    std::sort(table.rows.begin(), table.rows.end(), [](const EvaluationReport &a, const EvaluationReport &b) {
        const double fa = a.overall.f1.value_or(-1.0);
        const double fb = b.overall.f1.value_or(-1.0);
        if (fa != fb) {
            return fa > fb;
        }
        return a.model_id < b.model_id;
    });
    table.slice_names.assign(slices.begin(), slices.end());
    return table;
}

inline void to_json(nlohmann::json &j, const EvaluationReport &r) {
    nlohmann::json slices = nlohmann::json::object();
    for (const auto &[name, bundle] : r.per_slice) {
        slices[name] = bundle;
    }
    j = nlohmann::json{{"model_id", r.model_id},
                       {"dataset_id", r.dataset_id},
                       {"overall", r.overall},
                       {"per_slice", slices},
                       {"skipped", r.skipped}};
}

inline void to_json(nlohmann::json &j, const ComparisonTable &t) {
    j = nlohmann::json{{"dataset_id", t.dataset_id}, {"slices", t.slice_names}, {"rows", t.rows}};
}

}  // namespace biaslab
