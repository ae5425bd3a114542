#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "biaslab/error.hpp"
#include "biaslab/metrics.hpp"
#include "biaslab/random.hpp"
#include "biaslab/textprep.hpp"
#include "biaslab/types.hpp"

namespace biaslab {

/// Scores are clamped to [eps, 1 - eps] before taking logarithms.
inline constexpr double score_clamp_epsilon = 1e-12;

inline double logistic(double x) noexcept {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Binary cross-entropy of one clamped score.
inline double example_loss(double score, int label) noexcept {
    const double p = std::clamp(score, score_clamp_epsilon, 1.0 - score_clamp_epsilon);
    return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

/// Mean binary cross-entropy over the batch.
inline double loss(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        fail(ErrorKind::invalid, "loss: scores and labels differ in length");
    }
    if (scores.empty()) {
        fail(ErrorKind::invalid, "loss: empty input");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            fail(ErrorKind::invalid, "loss: labels must be 0 or 1");
        }
        sum += example_loss(scores[i], labels[i]);
    }
    return sum / static_cast<double>(scores.size());
}

struct ModelShape {
    std::size_t vocab_size = 0;
    std::size_t embedding_dim = 0;  // d
    std::size_t hidden_dim = 0;     // h

    [[nodiscard]] std::size_t parameter_count() const noexcept {
        return vocab_size * embedding_dim + embedding_dim * hidden_dim + hidden_dim + hidden_dim + 1;
    }

    friend bool operator==(const ModelShape &, const ModelShape &) = default;
};

struct LabeledExample {
    EncodedSequence encoded;
    Label label = Label::neutral;
};

/// Mean-pooled embeddings → tanh hidden layer → logistic output.
///
/// All parameters live in one flat buffer laid out as
///   embeddings   [vocab × d]  row-major
///   hidden W     [d × h]      row-major
///   hidden b     [h]
///   output w     [h]
///   output b     [1]
/// which keeps the optimizer, checksums and gradient checks uniform.
class ClassifierModel {
  public:
    ClassifierModel() = default;

    /// All-zero parameters.
    ClassifierModel(ModelShape shape, std::string vocabulary_ref)
        : shape_(shape), vocabulary_ref_(std::move(vocabulary_ref)), params_(shape.parameter_count(), 0.0) {
        if (shape.vocab_size < Vocabulary::specials_count || shape.embedding_dim == 0 || shape.hidden_dim == 0) {
            fail(ErrorKind::invalid, "model shape needs vocab >= 2, d >= 1, h >= 1");
        }
    }

    /// Weights ~ uniform(-scale, scale), biases zero.
    static ClassifierModel initialized(ModelShape shape, std::string vocabulary_ref, std::uint64_t seed,
                                       double scale = 0.05) {
        ClassifierModel m(shape, std::move(vocabulary_ref));
        Rng rng(seed);
        for (auto &w : m.embeddings()) w = rng.uniform(-scale, scale);
        for (auto &w : m.hidden_weights()) w = rng.uniform(-scale, scale);
        for (auto &w : m.output_weights()) w = rng.uniform(-scale, scale);
        return m;
    }

    [[nodiscard]] const ModelShape &shape() const noexcept { return shape_; }
    [[nodiscard]] const std::string &vocabulary_ref() const noexcept { return vocabulary_ref_; }

    [[nodiscard]] std::span<double> parameters() noexcept { return params_; }
    [[nodiscard]] std::span<const double> parameters() const noexcept { return params_; }

    [[nodiscard]] std::span<double> embeddings() noexcept { return block(0, embedding_size()); }
    [[nodiscard]] std::span<double> hidden_weights() noexcept { return block(hidden_w_offset(), d() * h()); }
    [[nodiscard]] std::span<double> hidden_bias() noexcept { return block(hidden_b_offset(), h()); }
    [[nodiscard]] std::span<double> output_weights() noexcept { return block(output_w_offset(), h()); }
    [[nodiscard]] double &output_bias() noexcept { return params_[output_b_offset()]; }

    [[nodiscard]] std::span<const double> embeddings() const noexcept { return block(0, embedding_size()); }
    [[nodiscard]] std::span<const double> hidden_weights() const noexcept {
        return block(hidden_w_offset(), d() * h());
    }
    [[nodiscard]] std::span<const double> hidden_bias() const noexcept { return block(hidden_b_offset(), h()); }
    [[nodiscard]] std::span<const double> output_weights() const noexcept { return block(output_w_offset(), h()); }
    [[nodiscard]] double output_bias() const noexcept { return params_[output_b_offset()]; }

    [[nodiscard]] std::size_t embedding_size() const noexcept { return shape_.vocab_size * d(); }
    [[nodiscard]] std::size_t hidden_w_offset() const noexcept { return embedding_size(); }
    [[nodiscard]] std::size_t hidden_b_offset() const noexcept { return hidden_w_offset() + d() * h(); }
    [[nodiscard]] std::size_t output_w_offset() const noexcept { return hidden_b_offset() + h(); }
    [[nodiscard]] std::size_t output_b_offset() const noexcept { return output_w_offset() + h(); }

    /// Intermediate values of one forward pass, reused by backprop.
    struct Trace {
        std::vector<double> pooled;      // d
        std::vector<double> activation;  // h, tanh outputs
        double logit = 0.0;
        double score = 0.5;
    };

    [[nodiscard]] Trace trace(const EncodedSequence &seq) const {
        if (seq.length == 0) {
            fail(ErrorKind::invalid, "empty input");
        }
        if (seq.length > seq.ids.size()) {
            fail(ErrorKind::invalid, "encoded sequence shorter than its recorded length");
        }
        Trace t;
        t.pooled.assign(d(), 0.0);
        const auto emb = embeddings();
        for (std::size_t pos = 0; pos < seq.length; ++pos) {
            const auto id = seq.ids[pos];
            if (id >= shape_.vocab_size) {
                fail(ErrorKind::invalid, "token id " + std::to_string(id) + " outside the vocabulary");
            }
            const auto row = emb.subspan(static_cast<std::size_t>(id) * d(), d());
            for (std::size_t k = 0; k < d(); ++k) {
                t.pooled[k] += row[k];
            }
        }
        const double inv_len = 1.0 / static_cast<double>(seq.length);
        for (auto &v : t.pooled) {
            v *= inv_len;
        }
        const auto w1 = hidden_weights();
        const auto b1 = hidden_bias();
        const auto w2 = output_weights();
        t.activation.assign(h(), 0.0);
        t.logit = output_bias();
        for (std::size_t j = 0; j < h(); ++j) {
            double z = b1[j];
            for (std::size_t k = 0; k < d(); ++k) {
                z += t.pooled[k] * w1[k * h() + j];
            }
            t.activation[j] = std::tanh(z);
            t.logit += t.activation[j] * w2[j];
        }
        t.score = logistic(t.logit);
        return t;
    }

    /// Probability that the sequence is biased, in (0, 1).
    [[nodiscard]] double forward(const EncodedSequence &seq) const { return trace(seq).score; }

    /// Adds weight · ∂loss/∂θ for one example into `grad` and returns the
    /// example's (unweighted) loss.
    double accumulate_gradient(const EncodedSequence &seq, int label, double weight, std::span<double> grad) const {
        const Trace t = trace(seq);
        const double p = t.score;
        // Inside the clamp band d(loss)/d(logit) = p - y; outside it the
        // clamped loss is flat.
        const bool clamped = p < score_clamp_epsilon || p > 1.0 - score_clamp_epsilon;
        const double dlogit = clamped ? 0.0 : weight * (p - static_cast<double>(label));
        grad[output_b_offset()] += dlogit;
        const auto w1 = hidden_weights();
        const auto w2 = output_weights();
        std::vector<double> dz(h());
        for (std::size_t j = 0; j < h(); ++j) {
            grad[output_w_offset() + j] += dlogit * t.activation[j];
            dz[j] = dlogit * w2[j] * (1.0 - t.activation[j] * t.activation[j]);
            grad[hidden_b_offset() + j] += dz[j];
        }
        std::vector<double> dpooled(d(), 0.0);
        for (std::size_t k = 0; k < d(); ++k) {
            for (std::size_t j = 0; j < h(); ++j) {
                grad[hidden_w_offset() + k * h() + j] += t.pooled[k] * dz[j];
                dpooled[k] += w1[k * h() + j] * dz[j];
            }
        }
        const double inv_len = 1.0 / static_cast<double>(seq.length);
        for (std::size_t pos = 0; pos < seq.length; ++pos) {
            const std::size_t row = static_cast<std::size_t>(seq.ids[pos]) * d();
            for (std::size_t k = 0; k < d(); ++k) {
                grad[row + k] += dpooled[k] * inv_len;
            }
        }
        return example_loss(p, label);
    }

    [[nodiscard]] bool all_finite() const noexcept {
        return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
    }

    /// Hash of shape, vocabulary reference and parameter bits.
    [[nodiscard]] std::string checksum() const {
        Fnv1a hash;
        hash.u64(shape_.vocab_size).u64(shape_.embedding_dim).u64(shape_.hidden_dim).text(vocabulary_ref_);
        for (const double v : params_) {
            hash.f64(v);
        }
        return hex64(hash.value());
    }

    void save(std::ostream &out) const;
    static ClassifierModel load(std::istream &in);

  private:
    [[nodiscard]] std::size_t d() const noexcept { return shape_.embedding_dim; }
    [[nodiscard]] std::size_t h() const noexcept { return shape_.hidden_dim; }
    std::span<double> block(std::size_t offset, std::size_t n) noexcept {
        return std::span<double>(params_).subspan(offset, n);
    }
    [[nodiscard]] std::span<const double> block(std::size_t offset, std::size_t n) const noexcept {
        return std::span<const double>(params_).subspan(offset, n);
    }

    ModelShape shape_;
    std::string vocabulary_ref_;
    std::vector<double> params_;
};

// ---- optimizer -------------------------------------------------------------

/// Adam with bias-corrected first/second moments over a flat parameter
/// buffer. Parameters in [frozen_begin, frozen_end) are left untouched.
class AdamOptimizer {
  public:
    AdamOptimizer(std::size_t n, double learning_rate, double beta1, double beta2, double epsilon)
        : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(n, 0.0), v_(n, 0.0) {}

    void freeze(std::size_t begin, std::size_t end) {
        frozen_begin_ = begin;
        frozen_end_ = end;
    }

    void step(std::span<double> params, std::span<const double> grad) {
        ++t_;
        const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (i >= frozen_begin_ && i < frozen_end_) {
                continue;
            }
            const double g = grad[i];
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
            const double m_hat = m_[i] / correction1;
            const double v_hat = v_[i] / correction2;
            params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
        }
    }

  private:
    double lr_, beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    std::uint64_t t_ = 0;
    std::size_t frozen_begin_ = 0, frozen_end_ = 0;
};

// ---- training ----------------------------------------------------------------

enum class Stage { distant_pretrain, gold_finetune };

inline std::string_view to_string(Stage s) {
    return s == Stage::distant_pretrain ? "distant-pretrain" : "gold-finetune";
}

inline Stage parse_stage(std::string_view s) {
    if (s == "distant-pretrain" || s == "distant") return Stage::distant_pretrain;
    if (s == "gold-finetune" || s == "gold") return Stage::gold_finetune;
    fail(ErrorKind::invalid, "unknown training stage '" + std::string(s) + "'");
}

struct TrainingConfig {
    Stage stage = Stage::distant_pretrain;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    double learning_rate = 1e-2;
    std::uint64_t seed = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t early_stop_patience = 0;  // 0 disables early stopping
    bool freeze_embeddings = false;
    /// Per-class loss weights {neutral, biased}; off by default.
    std::optional<std::array<double, 2>> class_weights;

    static TrainingConfig distant_defaults() { return TrainingConfig{}; }

    /// Same optimizer, learning rate reduced tenfold.
    static TrainingConfig gold_defaults() {
        TrainingConfig c;
        c.stage = Stage::gold_finetune;
        c.learning_rate = 1e-3;
        c.batch_size = 16;
        return c;
    }

    void validate() const {
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
            fail(ErrorKind::invalid, "learning rate must be positive");
        }
        if (batch_size < 1) {
            fail(ErrorKind::invalid, "batch size must be >= 1");
        }
        if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
            fail(ErrorKind::invalid, "adam betas must lie in (0, 1)");
        }
        if (!(epsilon > 0.0)) {
            fail(ErrorKind::invalid, "adam epsilon must be positive");
        }
        if (class_weights && (!((*class_weights)[0] > 0.0) || !((*class_weights)[1] > 0.0))) {
            fail(ErrorKind::invalid, "class weights must be positive");
        }
    }
};

struct TrainReport {
    Stage stage = Stage::distant_pretrain;
    std::vector<double> epoch_losses;       // mean training loss after each epoch
    std::vector<double> validation_losses;  // empty without a validation set
    std::optional<MetricBundle> validation_metrics;
    bool early_stopped = false;
    std::string checksum;

    friend bool operator==(const TrainReport &, const TrainReport &) = default;
};

inline std::vector<double> predict(const ClassifierModel &model, std::span<const LabeledExample> data) {
    std::vector<double> scores;
    scores.reserve(data.size());
    for (const auto &ex : data) {
        scores.push_back(model.forward(ex.encoded));
    }
    return scores;
}

inline std::vector<int> binary_labels(std::span<const LabeledExample> data) {
    std::vector<int> out;
    out.reserve(data.size());
    for (const auto &ex : data) {
        out.push_back(to_binary(ex.label));
    }
    return out;
}

inline double dataset_loss(const ClassifierModel &model, std::span<const LabeledExample> data) {
    const auto scores = predict(model, data);
    const auto labels = binary_labels(data);
    return loss(scores, labels);
}

/// Mini-batch Adam on the mean (optionally class-weighted) cross-entropy.
/// Deterministic in (model, data, config): the shuffle order is drawn from
/// `config.seed`. With a validation set and a positive patience, training
/// stops once validation loss has not improved for `patience` epochs and the
/// best-scoring parameters are restored.
inline TrainReport train_stage(ClassifierModel &model, std::span<const LabeledExample> data,
                               const TrainingConfig &config, std::span<const LabeledExample> validation = {}) {
    config.validate();
    if (data.empty()) {
        fail(ErrorKind::invalid, "training data is empty");
    }
    for (const auto &ex : data) {
        if (ex.encoded.length == 0) {
            fail(ErrorKind::invalid, "training data contains an empty sequence");
        }
    }
    TrainReport report;
    report.stage = config.stage;
    AdamOptimizer optimizer(model.parameters().size(), config.learning_rate, config.beta1, config.beta2,
                            config.epsilon);
    if (config.freeze_embeddings) {
        optimizer.freeze(0, model.embedding_size());
    }
    Rng rng(config.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(model.parameters().size());

    double best_validation = std::numeric_limits<double>::infinity();
    std::vector<double> best_params;
    std::size_t since_improvement = 0;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0, batch = 0; start < order.size(); start += config.batch_size, ++batch) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            double weight_total = 0.0;
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const auto &ex = data[order[i]];
                const int y = to_binary(ex.label);
                const double w = config.class_weights ? (*config.class_weights)[static_cast<std::size_t>(y)] : 1.0;
                weight_total += w;
                batch_loss += w * model.accumulate_gradient(ex.encoded, y, w, grad);
            }
            for (auto &g : grad) {
                g /= weight_total;
            }
            batch_loss /= weight_total;
            const bool finite_grad = std::all_of(grad.begin(), grad.end(), [](double g) { return std::isfinite(g); });
            if (!std::isfinite(batch_loss) || !finite_grad || !model.all_finite()) {
                fail(ErrorKind::numeric, "non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                             std::to_string(batch + 1));
            }
            optimizer.step(model.parameters(), grad);
        }
        const double epoch_loss = dataset_loss(model, data);
        if (!std::isfinite(epoch_loss) || !model.all_finite()) {
            fail(ErrorKind::numeric, "non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                         std::to_string((order.size() + config.batch_size - 1) / config.batch_size));
        }
        report.epoch_losses.push_back(epoch_loss);
        if (!validation.empty()) {
            const double vloss = dataset_loss(model, validation);
            report.validation_losses.push_back(vloss);
            if (vloss < best_validation) {
                best_validation = vloss;
                best_params.assign(model.parameters().begin(), model.parameters().end());
                since_improvement = 0;
            } else if (config.early_stop_patience > 0 && ++since_improvement >= config.early_stop_patience) {
                std::copy(best_params.begin(), best_params.end(), model.parameters().begin());
                report.early_stopped = true;
                break;
            }
        }
    }
    if (!validation.empty()) {
        const auto scores = predict(model, validation);
        const auto labels = binary_labels(validation);
        report.validation_metrics = compute_metrics(scores, labels, 0.5, AucPolicy::absent_if_undefined);
    }
    report.checksum = model.checksum();
    return report;
}

/// Maximum over all parameters of |analytic − numeric| / max(1e-8, |analytic| + |numeric|),
/// with the numeric gradient from central differences of step `epsilon`.
inline double gradient_check(const ClassifierModel &model, const LabeledExample &example, double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1e-3)) {
        fail(ErrorKind::invalid, "gradient check epsilon must lie in (0, 1e-3]");
    }
    const int y = to_binary(example.label);
    std::vector<double> analytic(model.parameters().size(), 0.0);
    model.accumulate_gradient(example.encoded, y, 1.0, analytic);
    ClassifierModel probe = model;
    auto params = probe.parameters();
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + epsilon;
        const double up = example_loss(probe.forward(example.encoded), y);
        params[i] = saved - epsilon;
        const double down = example_loss(probe.forward(example.encoded), y);
        params[i] = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double rel =
            std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
        worst = std::max(worst, rel);
    }
    return worst;
}

// ---- checkpoints -----------------------------------------------------------

inline constexpr std::string_view checkpoint_magic = "biaslab-model";
inline constexpr int checkpoint_version = 1;

// Flat text: header lines, then one shortest-round-trip decimal per
// parameter. Parsing reproduces every double bit-for-bit.
inline void ClassifierModel::save(std::ostream &out) const {
    out << checkpoint_magic << ' ' << checkpoint_version << '\n';
    out << "vocabulary " << vocabulary_ref_ << '\n';
    out << "shape " << shape_.vocab_size << ' ' << shape_.embedding_dim << ' ' << shape_.hidden_dim << '\n';
    out << "parameters " << params_.size() << '\n';
    char buf[64];
    for (const double v : params_) {
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        out.write(buf, ptr - buf);
        out << '\n';
    }
}

inline ClassifierModel ClassifierModel::load(std::istream &in) {
    const auto corrupt = [](const std::string &why) { fail(ErrorKind::invalid, "corrupt checkpoint: " + why); };
    std::string magic, key;
    int version = 0;
    if (!(in >> magic >> version) || magic != checkpoint_magic) {
        corrupt("bad magic");
    }
    if (version != checkpoint_version) {
        corrupt("unsupported version " + std::to_string(version));
    }
    std::string vocab_ref;
    ModelShape shape;
    std::size_t count = 0;
    if (!(in >> key >> vocab_ref) || key != "vocabulary") corrupt("missing vocabulary line");
    if (!(in >> key >> shape.vocab_size >> shape.embedding_dim >> shape.hidden_dim) || key != "shape")
        corrupt("missing shape line");
    if (!(in >> key >> count) || key != "parameters") corrupt("missing parameter count");
    ClassifierModel model(shape, vocab_ref);
    if (count != model.params_.size()) {
        corrupt("parameter count does not match shape");
    }
    std::string token;
    for (auto &v : model.params_) {
        if (!(in >> token)) {
            corrupt("truncated parameter list");
        }
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v)) {
            corrupt("malformed parameter '" + token + "'");
        }
    }
    return model;
}

}  // namespace biaslab
