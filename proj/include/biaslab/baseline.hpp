#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "biaslab/error.hpp"
#include "biaslab/metrics.hpp"
#include "biaslab/model.hpp"
#include "biaslab/random.hpp"
#include "biaslab/textprep.hpp"

namespace biaslab {

/// Logistic-linear comparison model over bag-of-words counts plus one
/// feature counting tokens from a biased-word lexicon.
class BaselineModel {
  public:
    BaselineModel(std::size_t vocab_size, std::set<TokenId> lexicon)
        : vocab_size_(vocab_size), lexicon_(std::move(lexicon)), params_(vocab_size + 2, 0.0) {}

    /// Lexicon words mapped through the vocabulary; out-of-vocabulary words
    /// cannot be observed in encoded input and are dropped.
    static std::set<TokenId> lexicon_ids(const Vocabulary &vocab, const Tokenizer &tokenizer,
                                         std::span<const std::string> words) {
        std::set<TokenId> ids;
        for (const auto &w : words) {
            for (const auto &token : tokenizer.tokenize(w)) {
                if (vocab.contains(token)) {
                    ids.insert(vocab.id_of(token));
                }
            }
        }
        return ids;
    }

    [[nodiscard]] std::size_t lexicon_hits(const EncodedSequence &seq) const {
        std::size_t hits = 0;
        for (std::size_t i = 0; i < seq.length; ++i) {
            hits += lexicon_.count(seq.ids[i]);
        }
        return hits;
    }

    [[nodiscard]] double score(const EncodedSequence &seq) const { return logistic(logit(seq)); }

    [[nodiscard]] double logit(const EncodedSequence &seq) const {
        double s = params_[bias_index()] + params_[lexicon_index()] * static_cast<double>(lexicon_hits(seq));
        for (std::size_t i = 0; i < seq.length; ++i) {
            s += params_[seq.ids[i]];
        }
        return s;
    }

    void accumulate_gradient(const EncodedSequence &seq, int label, std::span<double> grad) const {
        const double p = score(seq);
        const bool clamped = p < score_clamp_epsilon || p > 1.0 - score_clamp_epsilon;
        const double g = clamped ? 0.0 : p - static_cast<double>(label);
        grad[bias_index()] += g;
        grad[lexicon_index()] += g * static_cast<double>(lexicon_hits(seq));
        for (std::size_t i = 0; i < seq.length; ++i) {
            if (seq.ids[i] >= vocab_size_) {
                fail(ErrorKind::invalid, "token id outside the vocabulary");
            }
            grad[seq.ids[i]] += g;
        }
    }

    [[nodiscard]] std::span<double> parameters() noexcept { return params_; }
    [[nodiscard]] double lexicon_weight() const noexcept { return params_[lexicon_index()]; }

  private:
    [[nodiscard]] std::size_t lexicon_index() const noexcept { return vocab_size_; }
    [[nodiscard]] std::size_t bias_index() const noexcept { return vocab_size_ + 1; }

    std::size_t vocab_size_;
    std::set<TokenId> lexicon_;
    std::vector<double> params_;
};

struct BaselineResult {
    BaselineModel model;
    MetricBundle training_metrics;
};

/// Trains with the same Adam schedule as the neural classifier.
inline BaselineResult train_baseline(std::span<const LabeledExample> data, std::size_t vocab_size,
                                     std::set<TokenId> lexicon, const TrainingConfig &config) {
    config.validate();
    if (data.empty()) {
        fail(ErrorKind::invalid, "baseline training data is empty");
    }
    BaselineModel model(vocab_size, std::move(lexicon));
    AdamOptimizer optimizer(model.parameters().size(), config.learning_rate, config.beta1, config.beta2,
                            config.epsilon);
    Rng rng(config.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(model.parameters().size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t i = start; i < end; ++i) {
                model.accumulate_gradient(data[order[i]].encoded, to_binary(data[order[i]].label), grad);
            }
            for (auto &g : grad) {
                g /= static_cast<double>(end - start);
            }
            optimizer.step(model.parameters(), grad);
        }
    }
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto &ex : data) {
        scores.push_back(model.score(ex.encoded));
        labels.push_back(to_binary(ex.label));
    }
    auto metrics = compute_metrics(scores, labels, 0.5, AucPolicy::absent_if_undefined);
    return BaselineResult{std::move(model), metrics};
}

}  // namespace biaslab
