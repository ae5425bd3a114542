#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "biaslab/corpus.hpp"
#include "biaslab/error.hpp"
#include "biaslab/model.hpp"
#include "biaslab/textprep.hpp"
#include "biaslab/types.hpp"

namespace biaslab {

struct TextExample {
    std::string id;
    std::string text;
    Label label = Label::neutral;
    std::vector<std::string> tags;
};

/// A trained model together with everything needed to encode raw text.
struct ModelBundle {
    ClassifierModel model;
    Vocabulary vocabulary;
    Tokenizer tokenizer;
    std::size_t max_length = default_max_length;

    [[nodiscard]] EncodedSequence encode_text(std::string_view text) const {
        return encode(text, tokenizer, vocabulary, max_length);
    }

    [[nodiscard]] double score(std::string_view text) const { return model.forward(encode_text(text)); }

    [[nodiscard]] std::string id() const { return model.checksum(); }

    [[nodiscard]] std::vector<LabeledExample> encode_examples(std::span<const TextExample> examples) const {
        std::vector<LabeledExample> out;
        out.reserve(examples.size());
        for (const auto &ex : examples) {
            out.push_back(LabeledExample{encode_text(ex.text), ex.label});
        }
        return out;
    }

    /// Writes `path` (model) and `path.vocab` (one token per line).
    void save(const std::string &path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        std::ofstream vocab_out(path + ".vocab", std::ios::binary | std::ios::trunc);
        if (!out || !vocab_out) {
            fail(ErrorKind::io, "cannot write checkpoint '" + path + "'");
        }
        out << "# tokenizer " << tokenizer.version() << " max_length " << max_length << '\n';
        model.save(out);
        vocabulary.save(vocab_out);
        out.flush();
        vocab_out.flush();
        if (!out || !vocab_out) {
            fail(ErrorKind::io, "write to checkpoint '" + path + "' failed");
        }
    }

    static ModelBundle load(const std::string &path) {
        std::ifstream in(path, std::ios::binary);
        std::ifstream vocab_in(path + ".vocab", std::ios::binary);
        if (!in || !vocab_in) {
            fail(ErrorKind::io, "cannot open checkpoint '" + path + "' (and its .vocab file)");
        }
        std::string hash, key, version, key2;
        ModelBundle b;
        if (!(in >> hash >> key >> version >> key2 >> b.max_length) || hash != "#" || key != "tokenizer" ||
            key2 != "max_length") {
            fail(ErrorKind::invalid, "corrupt checkpoint: missing tokenizer header");
        }
        TokenizerRules rules;
        rules.lowercase = version.find("+lc") != std::string::npos;
        rules.split_punctuation = version.find("+ps") != std::string::npos;
        b.tokenizer = Tokenizer(rules);
        if (b.tokenizer.version() != version) {
            fail(ErrorKind::invalid, "checkpoint uses unknown tokenizer version " + version);
        }
        b.model = ClassifierModel::load(in);
        b.vocabulary = Vocabulary::load(vocab_in);
        if (b.vocabulary.reference() != b.model.vocabulary_ref() ||
            b.vocabulary.size() != b.model.shape().vocab_size) {
            fail(ErrorKind::invalid, "checkpoint vocabulary does not match the model");
        }
        return b;
    }
};

struct TransferConfig {
    std::size_t embedding_dim = 16;
    std::size_t hidden_dim = 16;
    std::size_t min_frequency = Vocabulary::default_min_frequency;
    std::size_t max_length = default_max_length;
    std::uint64_t init_seed = 1;
    TokenizerRules tokenizer;
    TrainingConfig distant = TrainingConfig::distant_defaults();
    TrainingConfig gold = TrainingConfig::gold_defaults();
};

struct TransferResult {
    ModelBundle bundle;
    TrainReport distant_report;
    TrainReport gold_report;
};

inline std::vector<TextItem> text_items(std::span<const TextExample> examples) {
    std::vector<TextItem> out;
    out.reserve(examples.size());
    for (const auto &e : examples) {
        out.push_back(TextItem{e.id, e.text});
    }
    return out;
}

inline std::string describe_collisions(const std::vector<Collision> &collisions) {
    std::string msg = "distant and gold corpora overlap (" + std::to_string(collisions.size()) + " collisions):";
    for (const auto &c : collisions) {
        msg += " [" + c.first_id + " ~ " + c.second_id + "]";
    }
    return msg;
}

/// Builds the vocabulary over distant ∪ gold training texts, initialises a
/// fresh model, trains it on distant labels and then continues every
/// parameter on gold labels. Refuses to run when the distant corpus shares a
/// normalized text with any gold example (training or validation).
inline TransferResult pretrain_then_finetune(std::span<const TextExample> distant, std::span<const TextExample> gold,
                                             const TransferConfig &config,
                                             std::span<const TextExample> gold_validation = {}) {
    if (gold.empty()) {
        fail(ErrorKind::invalid, "gold training set is empty");
    }
    const auto distant_items = text_items(distant);
    auto gold_items = text_items(gold);
    const auto validation_items = text_items(gold_validation);
    gold_items.insert(gold_items.end(), validation_items.begin(), validation_items.end());
    if (const auto collisions = check_overlap(distant_items, gold_items); !collisions.empty()) {
        fail(ErrorKind::conflict, describe_collisions(collisions));
    }

    std::vector<std::string> texts;
    texts.reserve(distant.size() + gold.size());
    for (const auto &e : distant) texts.push_back(e.text);
    for (const auto &e : gold) texts.push_back(e.text);

    TransferResult result;
    auto &b = result.bundle;
    b.tokenizer = Tokenizer(config.tokenizer);
    b.max_length = config.max_length;
    b.vocabulary = Vocabulary::build(b.tokenizer, texts, config.min_frequency);
    const ModelShape shape{b.vocabulary.size(), config.embedding_dim, config.hidden_dim};
    b.model = ClassifierModel::initialized(shape, b.vocabulary.reference(), config.init_seed);

    auto distant_config = config.distant;
    distant_config.stage = Stage::distant_pretrain;
    auto gold_config = config.gold;
    gold_config.stage = Stage::gold_finetune;

    const auto distant_encoded = b.encode_examples(distant);
    const auto gold_encoded = b.encode_examples(gold);
    const auto validation_encoded = b.encode_examples(gold_validation);

    if (distant_config.epochs > 0 && distant_encoded.empty()) {
        fail(ErrorKind::invalid, "distant training set is empty");
    }
    if (distant_encoded.empty()) {
        result.distant_report.stage = Stage::distant_pretrain;
        result.distant_report.checksum = b.model.checksum();
    } else {
        result.distant_report = train_stage(b.model, distant_encoded, distant_config);
    }
    result.gold_report = train_stage(b.model, gold_encoded, gold_config, validation_encoded);
    return result;
}

// ---- JSON ---------------------------------------------------------------

inline void to_json(nlohmann::json &j, const TrainReport &r) {
    j = nlohmann::json{{"stage", to_string(r.stage)},
                       {"epoch_losses", r.epoch_losses},
                       {"validation_losses", r.validation_losses},
                       {"validation_metrics",
                        r.validation_metrics ? nlohmann::json(*r.validation_metrics) : nlohmann::json(nullptr)},
                       {"early_stopped", r.early_stopped},
                       {"checksum", r.checksum}};
}

/// Reads the optimizer fields of a training config; absent keys keep the
/// values already in `c`.
inline void read_training_config(const nlohmann::json &j, TrainingConfig &c) {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.seed = j.value("seed", c.seed);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
    c.freeze_embeddings = j.value("freeze_embeddings", c.freeze_embeddings);
    if (const auto it = j.find("class_weights"); it != j.end() && !it->is_null()) {
        c.class_weights = it->get<std::array<double, 2>>();
    }
    c.validate();
}

}  // namespace biaslab
