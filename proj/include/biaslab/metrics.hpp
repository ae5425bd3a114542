#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "biaslab/error.hpp"

namespace biaslab {

/// Threshold metrics plus threshold-free AUC. Cells that are undefined for
/// the given data (e.g. precision with no positive predictions) are absent.
struct MetricBundle {
    double accuracy = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> auc;
    std::size_t support_neutral = 0;
    std::size_t support_biased = 0;
    std::size_t true_positive = 0;
    std::size_t false_positive = 0;
    std::size_t true_negative = 0;
    std::size_t false_negative = 0;

    [[nodiscard]] std::size_t support() const noexcept { return support_neutral + support_biased; }

    friend bool operator==(const MetricBundle &, const MetricBundle &) = default;
};

namespace detail {

inline void check_metric_inputs(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        fail(ErrorKind::invalid, "scores and labels differ in length");
    }
    if (scores.empty()) {
        fail(ErrorKind::invalid, "metrics need at least one example");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            fail(ErrorKind::invalid, "labels must be 0 or 1");
        }
        if (!std::isfinite(scores[i])) {
            fail(ErrorKind::invalid, "scores must be finite");
        }
    }
}

}  // namespace detail

/// Probability that a random positive outranks a random negative, ties
/// counting one half. Computed from mid-ranks in O(n log n).
inline double auc_mann_whitney(std::span<const double> scores, std::span<const int> labels) {
    detail::check_metric_inputs(scores, labels);
    const std::size_t n = scores.size();
    std::size_t positives = 0;
    for (const int y : labels) positives += static_cast<std::size_t>(y);
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) {
        fail(ErrorKind::undefined, "AUC undefined: labels contain a single class");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double positive_rank_sum = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        // ranks i+1 .. j share the mid-rank
        const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) {
                positive_rank_sum += mid_rank;
            }
        }
        i = j;
    }
    const double p = static_cast<double>(positives);
    const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(negatives));
}

enum class AucPolicy { require, absent_if_undefined };

inline MetricBundle compute_metrics(std::span<const double> scores, std::span<const int> labels,
                                    double threshold = 0.5, AucPolicy policy = AucPolicy::require) {
    detail::check_metric_inputs(scores, labels);
    if (!(threshold > 0.0 && threshold < 1.0)) {
        fail(ErrorKind::invalid, "threshold must lie in (0, 1)");
    }
    MetricBundle m;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i] == 1) {
            ++m.support_biased;
            ++(predicted ? m.true_positive : m.false_negative);
        } else {
            ++m.support_neutral;
            ++(predicted ? m.false_positive : m.true_negative);
        }
    }
    const auto tp = static_cast<double>(m.true_positive);
    const auto fp = static_cast<double>(m.false_positive);
    const auto fn = static_cast<double>(m.false_negative);
    m.accuracy = static_cast<double>(m.true_positive + m.true_negative) / static_cast<double>(scores.size());
    if (m.true_positive + m.false_positive > 0) {
        m.precision = tp / (tp + fp);
    }
    if (m.true_positive + m.false_negative > 0) {
        m.recall = tp / (tp + fn);
    }
    if (m.precision && m.recall) {
        m.f1 = 2.0 * tp / (2.0 * tp + fp + fn);
    }
    if (policy == AucPolicy::require || (m.support_biased > 0 && m.support_neutral > 0)) {
        m.auc = auc_mann_whitney(scores, labels);
    }
    return m;
}

inline void to_json(nlohmann::json &j, const MetricBundle &m) {
    const auto opt = [](const std::optional<double> &v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    j = nlohmann::json{{"accuracy", m.accuracy},
                       {"precision", opt(m.precision)},
                       {"recall", opt(m.recall)},
                       {"f1", opt(m.f1)},
                       {"auc", opt(m.auc)},
                       {"support", {{"neutral", m.support_neutral}, {"biased", m.support_biased}}},
                       {"confusion",
                        {{"tp", m.true_positive},
                         {"fp", m.false_positive},
                         {"tn", m.true_negative},
                         {"fn", m.false_negative}}}};
}

}  // namespace biaslab
