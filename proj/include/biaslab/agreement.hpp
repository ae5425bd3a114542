#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "biaslab/annotation.hpp"
#include "biaslab/error.hpp"
#include "biaslab/types.hpp"

namespace biaslab {

/// Item × rater grid of nominal ratings; nullopt marks a missing cell.
struct ReliabilityMatrix {
    std::vector<std::string> items;
    std::vector<std::string> raters;
    std::vector<std::optional<Label>> cells;  // row-major, items.size() × raters.size()

    [[nodiscard]] const std::optional<Label> &at(std::size_t item, std::size_t rater) const {
        return cells[item * raters.size() + rater];
    }

    /// Builds a matrix with generated ids "i0.." / "r0.." from nested rows.
    static ReliabilityMatrix from_rows(const std::vector<std::vector<std::optional<Label>>> &rows) {
        ReliabilityMatrix m;
        const std::size_t width = rows.empty() ? 0 : rows.front().size();
        for (std::size_t r = 0; r < width; ++r) {
            m.raters.push_back("r" + std::to_string(r));
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != width) {
                fail(ErrorKind::invalid, "reliability matrix rows must have equal width");
            }
            m.items.push_back("i" + std::to_string(i));
            m.cells.insert(m.cells.end(), rows[i].begin(), rows[i].end());
        }
        return m;
    }

    /// Items are sentences with at least one non-skip record, raters are the
    /// annotators who gave one; skips become missing cells.
    static ReliabilityMatrix from_annotations(const AnnotationStore &store) {
        std::set<std::string> item_set, rater_set;
        for (const auto *r : store.records()) {
            if (r->label != SentenceLabel::skip) {
                item_set.insert(r->sentence_id);
                rater_set.insert(r->annotator_id);
            }
        }
        ReliabilityMatrix m;
        m.items.assign(item_set.begin(), item_set.end());
        m.raters.assign(rater_set.begin(), rater_set.end());
        m.cells.assign(m.items.size() * m.raters.size(), std::nullopt);
        std::map<std::string, std::size_t> rater_index;
        for (std::size_t i = 0; i < m.raters.size(); ++i) {
            rater_index[m.raters[i]] = i;
        }
        for (std::size_t i = 0; i < m.items.size(); ++i) {
            for (const auto *r : store.records_for(m.items[i])) {
                if (r->label != SentenceLabel::skip) {
                    m.cells[i * m.raters.size() + rater_index.at(r->annotator_id)] =
                        r->label == SentenceLabel::biased ? Label::biased : Label::neutral;
                }
            }
        }
        return m;
    }

    void validate() const {
        if (cells.size() != items.size() * raters.size()) {
            fail(ErrorKind::invalid, "reliability matrix: cell count does not match dimensions");
        }
        for (const auto &c : cells) {
            if (c) {
                return;
            }
        }
        fail(ErrorKind::undefined, "undefined agreement: reliability matrix has no ratings");
    }
};

enum class Statistic { krippendorff_alpha_nominal, fleiss_kappa, percent_agreement };

inline std::string_view to_string(Statistic s) {
    switch (s) {
        case Statistic::krippendorff_alpha_nominal: return "krippendorff-alpha-nominal";
        case Statistic::fleiss_kappa: return "fleiss-kappa";
        case Statistic::percent_agreement: return "percent-agreement";
    }
    return "?";
}

struct AgreementReport {
    Statistic statistic = Statistic::krippendorff_alpha_nominal;
    double value = 0.0;
    std::size_t n_items = 0;
    std::size_t n_raters = 0;
    std::size_t pairable_values = 0;
};

inline void to_json(nlohmann::json &j, const AgreementReport &r) {
    j = nlohmann::json{{"statistic", to_string(r.statistic)},
                       {"value", r.value},
                       {"n_items", r.n_items},
                       {"n_raters", r.n_raters},
                       {"pairable_values", r.pairable_values}};
}

namespace detail {

inline constexpr std::size_t category_count = 2;
using CategoryCounts = std::array<std::size_t, category_count>;

inline std::vector<CategoryCounts> per_item_counts(const ReliabilityMatrix &m) {
    std::vector<CategoryCounts> out(m.items.size(), CategoryCounts{});
    for (std::size_t i = 0; i < m.items.size(); ++i) {
        for (std::size_t r = 0; r < m.raters.size(); ++r) {
            if (const auto &c = m.at(i, r)) {
                ++out[i][static_cast<std::size_t>(to_binary(*c))];
            }
        }
    }
    return out;
}

inline std::size_t total(const CategoryCounts &c) {
    std::size_t n = 0;
    for (const auto v : c) n += v;
    return n;
}

}  // namespace detail

/// Nominal Krippendorff's alpha from the coincidence matrix over pairable
/// values (units with at least two ratings).
inline AgreementReport krippendorff_alpha(const ReliabilityMatrix &m) {
    m.validate();
    constexpr auto K = detail::category_count;
    std::array<std::array<double, K>, K> coincidence{};
    std::size_t pairable = 0;
    for (const auto &counts : detail::per_item_counts(m)) {
        const auto mu = detail::total(counts);
        if (mu < 2) {
            continue;
        }
        pairable += mu;
        const double weight = 1.0 / static_cast<double>(mu - 1);
        for (std::size_t c = 0; c < K; ++c) {
            for (std::size_t k = 0; k < K; ++k) {
                const double pairs = c == k ? static_cast<double>(counts[c] * (counts[c] - (counts[c] > 0 ? 1 : 0)))
                                            : static_cast<double>(counts[c] * counts[k]);
                coincidence[c][k] += pairs * weight;
            }
        }
    }
    if (pairable == 0) {
        fail(ErrorKind::undefined, "undefined agreement: no pairable values");
    }
    std::array<double, K> marginal{};
    double observed_disagreement = 0.0;
    for (std::size_t c = 0; c < K; ++c) {
        for (std::size_t k = 0; k < K; ++k) {
            marginal[c] += coincidence[c][k];
            if (c != k) {
                observed_disagreement += coincidence[c][k];
            }
        }
    }
    const double n = static_cast<double>(pairable);
    double expected_disagreement = 0.0;
    for (std::size_t c = 0; c < K; ++c) {
        for (std::size_t k = 0; k < K; ++k) {
            if (c != k) {
                expected_disagreement += marginal[c] * marginal[k];
            }
        }
    }
    if (expected_disagreement == 0.0) {
        fail(ErrorKind::undefined, "undefined agreement: only one category among pairable values");
    }
    const double alpha = 1.0 - (n - 1.0) * observed_disagreement / expected_disagreement;
    return {Statistic::krippendorff_alpha_nominal, alpha, m.items.size(), m.raters.size(), pairable};
}

/// Fleiss' kappa. Requires the same number (>= 2) of ratings on every item.
inline AgreementReport fleiss_kappa(const ReliabilityMatrix &m) {
    m.validate();
    const auto counts = detail::per_item_counts(m);
    const std::size_t per_item = detail::total(counts.front());
    for (const auto &c : counts) {
        if (detail::total(c) != per_item) {
            fail(ErrorKind::invalid,
                 "fleiss kappa needs equal rating counts per item; use krippendorff alpha for incomplete data");
        }
    }
    if (per_item < 2) {
        fail(ErrorKind::invalid, "fleiss kappa needs at least two ratings per item");
    }
    const double n = static_cast<double>(per_item);
    const double items = static_cast<double>(counts.size());
    std::array<double, detail::category_count> category_share{};
    double mean_agreement = 0.0;
    for (const auto &c : counts) {
        double squares = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            squares += static_cast<double>(c[k] * c[k]);
            category_share[k] += static_cast<double>(c[k]);
        }
        mean_agreement += (squares - n) / (n * (n - 1.0));
    }
    mean_agreement /= items;
    double chance = 0.0;
    for (auto &p : category_share) {
        p /= items * n;
        chance += p * p;
    }
    if (chance == 1.0) {
        fail(ErrorKind::undefined, "undefined agreement: a single category is used throughout");
    }
    const double kappa = (mean_agreement - chance) / (1.0 - chance);
    return {Statistic::fleiss_kappa, kappa, m.items.size(), m.raters.size(), counts.size() * per_item};
}

/// Mean over multiply-rated items of the share of agreeing rater pairs.
inline AgreementReport percent_agreement(const ReliabilityMatrix &m) {
    m.validate();
    double sum = 0.0;
    std::size_t rated_items = 0;
    std::size_t values = 0;
    for (const auto &c : detail::per_item_counts(m)) {
        const auto mu = detail::total(c);
        if (mu < 2) {
            continue;
        }
        std::size_t agreeing = 0;
        for (const auto v : c) {
            agreeing += v * (v - (v > 0 ? 1 : 0)) / 2;
        }
        sum += static_cast<double>(agreeing) / static_cast<double>(mu * (mu - 1) / 2);
        ++rated_items;
        values += mu;
    }
    if (rated_items == 0) {
        fail(ErrorKind::undefined, "undefined agreement: no item has two or more ratings");
    }
    return {Statistic::percent_agreement, sum / static_cast<double>(rated_items), m.items.size(), m.raters.size(),
            values};
}

inline AgreementReport compute_agreement(Statistic s, const ReliabilityMatrix &m) {
    switch (s) {
        case Statistic::krippendorff_alpha_nominal: return krippendorff_alpha(m);
        case Statistic::fleiss_kappa: return fleiss_kappa(m);
        case Statistic::percent_agreement: return percent_agreement(m);
    }
    fail(ErrorKind::invalid, "unknown statistic");
}

inline Statistic parse_statistic(std::string_view s) {
    if (s == "alpha" || s == "krippendorff-alpha-nominal") return Statistic::krippendorff_alpha_nominal;
    if (s == "kappa" || s == "fleiss-kappa") return Statistic::fleiss_kappa;
    if (s == "percent" || s == "percent-agreement") return Statistic::percent_agreement;
    fail(ErrorKind::invalid, "unknown statistic '" + std::string(s) + "' (expected alpha|kappa|percent)");
}

}  // namespace biaslab
