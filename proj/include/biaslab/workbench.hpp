#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "biaslab/agreement.hpp"
#include "biaslab/annotation.hpp"
#include "biaslab/corpus.hpp"
#include "biaslab/error.hpp"
#include "biaslab/game.hpp"
#include "biaslab/pipeline.hpp"
#include "biaslab/time.hpp"

namespace biaslab {

inline constexpr int schema_version = 1;

/// Everything the service persists: corpus, annotations, game state, split
/// sets and registered models. All mutations go through apply() so they can
/// be journaled and replayed; a command carries its own timestamp, which
/// makes replay deterministic.
class Workbench {
  public:
    explicit Workbench(GameConfig game_config = {}, std::filesystem::path model_dir = {})
        : game_(std::move(game_config)), model_dir_(std::move(model_dir)) {
        annotations_.set_text_lookup([this](std::string_view id) { return text_of(id); });
    }

    Workbench(const Workbench &) = delete;
    Workbench &operator=(const Workbench &) = delete;

    [[nodiscard]] const CorpusStore &corpus() const noexcept { return corpus_; }
    [[nodiscard]] const AnnotationStore &annotations() const noexcept { return annotations_; }
    [[nodiscard]] const Game &game() const noexcept { return game_; }
    [[nodiscard]] const std::map<std::string, SplitResult> &splits() const noexcept { return splits_; }
    [[nodiscard]] const std::map<std::string, ModelBundle> &models() const noexcept { return models_; }

    [[nodiscard]] const ModelBundle &model(std::string_view id) const {
        const auto it = models_.find(std::string(id));
        if (it == models_.end()) {
            fail(ErrorKind::not_found, "unknown model '" + std::string(id) + "'");
        }
        return it->second;
    }

    [[nodiscard]] std::optional<std::string> text_of(std::string_view id) const {
        if (const auto *s = corpus_.find(id)) {
            return s->text;
        }
        if (const auto *a = game_.find_authored(id)) {
            return a->text;
        }
        return std::nullopt;
    }

    /// Registers an in-memory model without journaling (tools and tests).
    std::string add_model(ModelBundle bundle) {
        auto id = bundle.id();
        models_.insert_or_assign(id, std::move(bundle));
        return id;
    }

    /// Executes one command. Throws biaslab::Error without changing state
    /// when the command is rejected.
    nlohmann::json apply(const nlohmann::json &command);

    [[nodiscard]] nlohmann::json to_json() const;
    void load_json(const nlohmann::json &j);

    /// Rebuilds the game's item pools from the corpus and expert annotations.
    void refresh_pools();

  private:
    static TimePoint time_of(const nlohmann::json &command) {
        const auto it = command.find("time");
        if (it == command.end() || !it->is_string()) {
            fail(ErrorKind::invalid, "command has no time");
        }
        return parse_rfc3339(it->get<std::string>());
    }

    CorpusStore corpus_;
    AnnotationStore annotations_;
    Game game_;
    std::map<std::string, SplitResult> splits_;
    std::map<std::string, ModelBundle> models_;
    std::filesystem::path model_dir_;
};

namespace detail {

inline const nlohmann::json &arg(const nlohmann::json &command, const char *key) {
    const auto it = command.find(key);
    if (it == command.end()) {
        fail(ErrorKind::invalid, std::string("missing field '") + key + "'");
    }
    return *it;
}

template <class T>
T arg_as(const nlohmann::json &command, const char *key) {
    try {
        return arg(command, key).get<T>();
    } catch (const nlohmann::json::exception &) {
        fail(ErrorKind::invalid, std::string("field '") + key + "' has the wrong type");
    }
}

}  // namespace detail

inline void Workbench::refresh_pools() {
    std::vector<CalibrationItem> calibration;
    std::vector<PoolItem> production;
    for (const auto *s : corpus_.sentences()) {
        if (s->kind == CorpusKind::gold && s->gold_label) {
            CalibrationItem item{s->id, s->text, *s->gold_label, {}};
            // words marked by a strict majority of the experts who called it biased
            std::map<std::size_t, std::size_t> marks;
            std::size_t experts = 0;
            for (const auto *r : annotations_.records_for(s->id)) {
                const auto *p = annotations_.find_profile(r->annotator_id);
                if (p != nullptr && p->role == Role::expert && r->label == SentenceLabel::biased) {
                    ++experts;
                    for (const auto w : r->biased_words) ++marks[w];
                }
            }
            for (const auto &[w, n] : marks) {
                if (2 * n > experts) item.expert_biased_words.push_back(w);
            }
            calibration.push_back(std::move(item));
        } else if (s->kind == CorpusKind::unlabeled) {
            production.push_back(PoolItem{s->id, s->text});
        }
    }
    game_.set_calibration_pool(std::move(calibration));
    game_.set_production_pool(std::move(production));
}

inline nlohmann::json Workbench::apply(const nlohmann::json &command) {
    using nlohmann::json;
    using detail::arg;
    using detail::arg_as;
    if (!command.is_object()) {
        fail(ErrorKind::invalid, "command must be an object");
    }
    const auto op = arg_as<std::string>(command, "op");
    try {
        if (op == "add_outlets") {
            std::vector<Outlet> outlets;
            for (const auto &o : arg(command, "outlets")) outlets.push_back(o.get<Outlet>());
            CorpusStore staged = corpus_;
            for (auto &o : outlets) staged.add_outlet(std::move(o));
            corpus_ = std::move(staged);
            return json{{"added", outlets.size()}};
        }
        if (op == "add_sentences") {
            const auto kind = parse_corpus_kind(arg_as<std::string>(command, "kind"));
            std::vector<Sentence> batch;
            for (const auto &s : arg(command, "sentences")) {
                auto sentence = s.get<Sentence>();
                sentence.kind = kind;
                if (game_.find_authored(sentence.id) != nullptr) {
                    fail(ErrorKind::conflict, "sentence id '" + sentence.id + "' is taken by an authored sentence");
                }
                batch.push_back(std::move(sentence));
            }
            const auto n = corpus_.add_sentences(std::move(batch));
            refresh_pools();
            return json{{"added", n}};
        }
        if (op == "assign_distant_labels") {
            const auto rule = command.contains("rule") && !command.at("rule").is_null()
                                  ? OutletRule::from_json(command.at("rule"))
                                  : OutletRule::default_rule();
            const auto report = corpus_.assign_distant_labels(rule);
            return json{{"labeled", report.labeled},
                        {"biased", report.biased},
                        {"neutral", report.neutral},
                        {"excluded", report.excluded}};
        }
        if (op == "split") {
            SplitSpec spec;
            spec.seed = arg_as<std::uint64_t>(command, "seed");
            spec.train = arg_as<double>(command, "train");
            spec.validation = arg_as<double>(command, "validation");
            spec.test = arg_as<double>(command, "test");
            spec.stratify = parse_stratify(command.value("stratify", std::string("none")));
            const auto kind = parse_corpus_kind(arg_as<std::string>(command, "kind"));
            auto result = corpus_.split(spec, kind);
            splits_.insert_or_assign(std::string(to_string(kind)), result);
            return json(result);
        }
        if (op == "add_profiles") {
            AnnotationStore staged = annotations_;
            staged.set_text_lookup([this](std::string_view id) { return text_of(id); });
            for (const auto &p : arg(command, "profiles")) staged.add_profile(p.get<AnnotatorProfile>());
            annotations_ = std::move(staged);
            annotations_.set_text_lookup([this](std::string_view id) { return text_of(id); });
            return json{{"profiles", annotations_.profiles().size()}};
        }
        if (op == "submit_annotations") {
            AnnotationStore staged = annotations_;
            std::vector<std::string> ids;
            bool expert = false;
            if (const auto it = command.find("profiles"); it != command.end()) {
                for (const auto &p : *it) staged.add_profile(p.get<AnnotatorProfile>());
            }
            for (auto r : arg(command, "records")) {
                if (r.is_object() && !r.contains("timestamp")) r["timestamp"] = command.at("time");
                auto record = r.get<AnnotationRecord>();
                if (const auto *p = staged.find_profile(record.annotator_id); p && p->role == Role::player) {
                    fail(ErrorKind::conflict, "player annotations are collected through the game");
                }
                if (const auto *p = staged.find_profile(record.annotator_id); p && p->role == Role::expert) {
                    expert = true;
                }
                ids.push_back(staged.submit(std::move(record)));
            }
            annotations_ = std::move(staged);
            annotations_.set_text_lookup([this](std::string_view id) { return text_of(id); });
            if (expert) refresh_pools();
            return json{{"ids", ids}};
        }
        if (op == "apply_gold") {
            const auto min = arg_as<std::size_t>(command, "min_annotators");
            std::vector<std::string> ids;
            for (const auto *s : corpus_.sentences(CorpusKind::gold)) ids.push_back(s->id);
            const auto report = annotations_.aggregate_gold(ids, min);
            for (const auto &g : report.labels) corpus_.set_gold_label(g.sentence_id, g.label);
            refresh_pools();
            return json(report);
        }
        if (op == "start_session") {
            return json(game_.start_session(annotations_, arg_as<std::string>(command, "player_id"),
                                            time_of(command)));
        }
        if (op == "serve_next") {
            return json(game_.serve_next(annotations_, arg_as<std::string>(command, "session_id"), time_of(command)));
        }
        if (op == "acknowledge_tutorial") {
            const auto id = arg_as<std::string>(command, "session_id");
            game_.acknowledge_tutorial(id, arg_as<std::size_t>(command, "step"), time_of(command));
            return json(game_.session(id));
        }
        if (op == "submit_answer") {
            const auto label = parse_label(arg_as<std::string>(command, "label"));
            auto words = command.contains("biased_words") ? arg_as<std::vector<std::size_t>>(command, "biased_words")
                                                          : std::vector<std::size_t>{};
            return json(game_.submit_answer(annotations_, arg_as<std::string>(command, "session_id"),
                                            arg_as<std::string>(command, "sentence_id"), label, std::move(words),
                                            time_of(command)));
        }
        if (op == "submit_authored") {
            const auto &a = game_.submit_authored(arg_as<std::string>(command, "session_id"),
                                                  arg_as<std::string>(command, "text"), time_of(command));
            return json(a);
        }
        if (op == "expire_sessions") {
            const auto ttl = std::chrono::milliseconds(arg_as<std::int64_t>(command, "ttl_ms"));
            return json{{"abandoned", game_.expire_sessions(time_of(command), ttl)}};
        }
        if (op == "register_model") {
            const auto id = arg_as<std::string>(command, "model_id");
            if (model_dir_.empty()) {
                fail(ErrorKind::invalid, "this workbench has no model directory");
            }
            auto bundle = ModelBundle::load((model_dir_ / (id + ".model")).string());
            if (bundle.id() != id) {
                fail(ErrorKind::invalid, "model file does not match id '" + id + "'");
            }
            models_.insert_or_assign(id, std::move(bundle));
            return json{{"model_id", id}};
        }
    } catch (const nlohmann::json::exception &e) {
        fail(ErrorKind::invalid, std::string("malformed command: ") + e.what());
    }
    fail(ErrorKind::invalid, "unknown command '" + op + "'");
}

inline nlohmann::json Workbench::to_json() const {
    nlohmann::json splits = nlohmann::json::object();
    for (const auto &[kind, s] : splits_) splits[kind] = s;
    nlohmann::json models = nlohmann::json::array();
    for (const auto &[id, m] : models_) models.push_back(id);
    return nlohmann::json{{"schema_version", schema_version},
                          {"corpus", corpus_.to_json()},
                          {"annotations", annotations_.to_json()},
                          {"game", game_.to_json()},
                          {"splits", splits},
                          {"models", models}};
}

inline void Workbench::load_json(const nlohmann::json &j) {
    const auto version = j.at("schema_version").get<int>();
    if (version > schema_version) {
        fail(ErrorKind::invalid, "store schema version " + std::to_string(version) + " is newer than supported (" +
                                     std::to_string(schema_version) + ")");
    }
    corpus_ = CorpusStore::from_json(j.at("corpus"));
    game_.load_json(j.at("game"));  // authored texts must resolve before annotations load
    annotations_.load_json(j.at("annotations"));
    splits_.clear();
    for (const auto &[kind, s] : j.at("splits").items()) splits_.emplace(kind, s.get<SplitResult>());
    models_.clear();
    for (const auto &id : j.at("models")) {
        nlohmann::json cmd{{"op", "register_model"}, {"model_id", id}};
        apply(cmd);
    }
    refresh_pools();
}

}  // namespace biaslab
