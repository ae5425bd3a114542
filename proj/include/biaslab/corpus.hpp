#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "biaslab/csv.hpp"
#include "biaslab/error.hpp"
#include "biaslab/random.hpp"
#include "biaslab/textprep.hpp"
#include "biaslab/time.hpp"
#include "biaslab/types.hpp"

namespace biaslab {

using json = nlohmann::json;

struct Outlet {
    std::string id;
    std::string name;
    Leaning leaning = Leaning::center;
    Standard standard = Standard::high;

    friend bool operator==(const Outlet &, const Outlet &) = default;
};

struct Sentence {
    std::string id;
    std::string text;
    std::string outlet_id;
    std::string topic;
    std::optional<std::chrono::year_month_day> date;
    CorpusKind kind = CorpusKind::unlabeled;
    std::vector<std::string> tags;     // slice tags, e.g. "negation"
    std::optional<Label> gold_label;  // supplied at ingestion or by aggregation

    friend bool operator==(const Sentence &, const Sentence &) = default;
};

struct DistantLabel {
    std::string sentence_id;
    Label label = Label::neutral;
    std::string source_rule;

    friend bool operator==(const DistantLabel &, const DistantLabel &) = default;
};

enum class StratifyBy { none, label, topic };

inline StratifyBy parse_stratify(std::string_view s) {
    if (s == "none") return StratifyBy::none;
    if (s == "label") return StratifyBy::label;
    if (s == "topic") return StratifyBy::topic;
    fail(ErrorKind::invalid, "unknown stratify mode '" + std::string(s) + "'");
}

struct SplitSpec {
    std::uint64_t seed = 0;
    double train = 0.8;
    double validation = 0.1;
    double test = 0.1;
    StratifyBy stratify = StratifyBy::none;

    void validate() const {
        for (const double f : {train, validation, test}) {
            if (!(f >= 0.0 && f <= 1.0)) {
                fail(ErrorKind::invalid, "split fractions must lie in [0, 1]");
            }
        }
        if (std::abs(train + validation + test - 1.0) > 1e-9) {
            fail(ErrorKind::invalid, "split fractions must sum to 1");
        }
    }
};

struct SplitResult {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;

    friend bool operator==(const SplitResult &, const SplitResult &) = default;
};

/// Sentence-id pairs whose normalized texts coincide.
struct Collision {
    std::string first_id;
    std::string second_id;
    std::string normalized_text;

    friend bool operator==(const Collision &, const Collision &) = default;
};

struct TextItem {
    std::string id;
    std::string text;
};

/// Every (a, b) pair with equal matching keys, ordered by (key, a, b).
inline std::vector<Collision> check_overlap(std::span<const TextItem> first, std::span<const TextItem> second) {
    std::multimap<std::string, const TextItem *> by_key;
    for (const auto &item : second) {
        by_key.emplace(normalize_for_matching(item.text), &item);
    }
    std::vector<Collision> out;
    for (const auto &item : first) {
        auto key = normalize_for_matching(item.text);
        const auto [lo, hi] = by_key.equal_range(key);
        for (auto it = lo; it != hi; ++it) {
            out.push_back(Collision{item.id, it->second->id, key});
        }
    }
    std::sort(out.begin(), out.end(), [](const Collision &a, const Collision &b) {
        return std::tie(a.normalized_text, a.first_id, a.second_id) <
               std::tie(b.normalized_text, b.first_id, b.second_id);
    });
    return out;
}

enum class RuleOutcome { biased, neutral, exclude };

/// Maps each (leaning, standard) configuration to a distant label or to
/// exclusion from the distant corpus.
class OutletRule {
  public:
    /// Partisan leanings are biased regardless of standard; centre leanings
    /// with high standards are neutral; centre leanings with partisan
    /// standards are excluded.
    static OutletRule default_rule() {
        OutletRule rule;
        for (const auto standard : all_standards) {
            for (const auto leaning : {Leaning::far_left, Leaning::left, Leaning::right, Leaning::far_right}) {
                rule.set(leaning, standard, RuleOutcome::biased);
            }
            for (const auto leaning : {Leaning::center_left, Leaning::center, Leaning::center_right}) {
                rule.set(leaning, standard,
                         standard == Standard::high ? RuleOutcome::neutral : RuleOutcome::exclude);
            }
        }
        return rule;
    }

    void set(Leaning leaning, Standard standard, RuleOutcome outcome) { table_[{leaning, standard}] = outcome; }

    [[nodiscard]] std::optional<RuleOutcome> lookup(Leaning leaning, Standard standard) const {
        const auto it = table_.find({leaning, standard});
        if (it == table_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] static std::string describe(Leaning leaning, Standard standard, RuleOutcome outcome) {
        std::string out = "leaning=";
        out += to_string(leaning);
        out += ",standard=";
        out += to_string(standard);
        out += outcome == RuleOutcome::biased ? " -> biased" : outcome == RuleOutcome::neutral ? " -> neutral"
                                                                                                : " -> exclude";
        return out;
    }

    /// Object keyed by "<leaning>/<standard>" with values biased|neutral|exclude.
    static OutletRule from_json(const json &j) {
        OutletRule rule;
        for (const auto &[key, value] : j.items()) {
            const auto slash = key.find('/');
            if (slash == std::string::npos) {
                fail(ErrorKind::invalid, "outlet rule key must be '<leaning>/<standard>': " + key);
            }
            const auto outcome = value.get<std::string>();
            RuleOutcome o{};
            if (outcome == "biased") {
                o = RuleOutcome::biased;
            } else if (outcome == "neutral") {
                o = RuleOutcome::neutral;
            } else if (outcome == "exclude") {
                o = RuleOutcome::exclude;
            } else {
                fail(ErrorKind::invalid, "outlet rule outcome must be biased|neutral|exclude: " + outcome);
            }
            rule.set(parse_leaning(key.substr(0, slash)), parse_standard(key.substr(slash + 1)), o);
        }
        return rule;
    }

  private:
    std::map<std::pair<Leaning, Standard>, RuleOutcome> table_;
};

struct DistantLabelReport {
    std::size_t labeled = 0;
    std::size_t biased = 0;
    std::size_t neutral = 0;
    std::vector<std::string> excluded;  // sentence ids removed by the rule
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace detail

/// In-memory sentence store with outlet registry, distant labels, and gold
/// labels. Single writer; callers serialize mutations.
class CorpusStore {
  public:
    // ---- outlets -------------------------------------------------------

    void add_outlet(Outlet outlet) {
        if (outlet.id.empty()) {
            fail(ErrorKind::invalid, "outlet id must be non-empty");
        }
        if (outlets_.count(outlet.id) != 0) {
            fail(ErrorKind::conflict, "duplicate outlet id '" + outlet.id + "'");
        }
        auto id = outlet.id;
        outlets_.emplace(std::move(id), std::move(outlet));
    }

    /// CSV with header `id,name,leaning,standard`. All-or-nothing.
    std::size_t load_outlets_csv(std::istream &in) {
        const auto rows = csv::parse(in);
        if (rows.empty() || rows.front().fields != std::vector<std::string>{"id", "name", "leaning", "standard"}) {
            fail(ErrorKind::invalid, "outlet registry: expected header id,name,leaning,standard");
        }
        std::vector<Outlet> parsed;
        std::set<std::string> seen;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto &r = rows[i];
            const auto where = ", line " + std::to_string(r.line);
            if (r.fields.size() != 4) {
                fail(ErrorKind::invalid, "outlet registry: expected 4 fields" + where);
            }
            Outlet o;
            o.id = r.fields[0];
            o.name = r.fields[1];
            try {
                o.leaning = parse_leaning(r.fields[2]);
                o.standard = parse_standard(r.fields[3]);
            } catch (const Error &e) {
                fail(ErrorKind::invalid, std::string("outlet registry: ") + e.what() + where);
            }
            if (o.id.empty() || outlets_.count(o.id) != 0 || !seen.insert(o.id).second) {
                fail(ErrorKind::conflict, "outlet registry: duplicate or empty outlet id '" + o.id + "'" + where);
            }
            parsed.push_back(std::move(o));
        }
        for (auto &o : parsed) {
            add_outlet(std::move(o));
        }
        return parsed.size();
    }

    std::size_t load_outlets_csv(const std::string &path) {
        std::ifstream in(path);
        if (!in) {
            fail(ErrorKind::io, "cannot open outlet registry '" + path + "'");
        }
        return load_outlets_csv(in);
    }

    [[nodiscard]] const Outlet *find_outlet(std::string_view id) const {
        const auto it = outlets_.find(std::string(id));
        return it == outlets_.end() ? nullptr : &it->second;
    }

    [[nodiscard]] const std::map<std::string, Outlet> &outlets() const noexcept { return outlets_; }

    // ---- sentences -----------------------------------------------------

    /// JSONL, one record per line:
    /// {"id", "text", "outlet", "topic", "date": "YYYY-MM-DD"|null}
    /// plus optional "tags" (string list) and, for gold files, "label".
    /// The whole stream is validated before anything is stored.
    std::size_t ingest_jsonl(std::istream &in, CorpusKind kind) {
        std::vector<Sentence> batch;
        std::set<std::string> batch_ids;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (detail::trim(line).empty()) {
                continue;
            }
            auto sentence = parse_record(line, line_no, kind);
            if (sentences_.count(sentence.id) != 0 || !batch_ids.insert(sentence.id).second) {
                fail(ErrorKind::conflict,
                     "duplicate sentence id '" + sentence.id + "', line " + std::to_string(line_no));
            }
            batch.push_back(std::move(sentence));
        }
        for (auto &s : batch) {
            auto id = s.id;
            sentences_.emplace(std::move(id), std::move(s));
        }
        return batch.size();
    }

    std::size_t ingest_jsonl(const std::string &path, CorpusKind kind) {
        std::ifstream in(path);
        if (!in) {
            fail(ErrorKind::io, "cannot open corpus file '" + path + "'");
        }
        return ingest_jsonl(in, kind);
    }

    /// Validates and inserts already-parsed sentences atomically.
    std::size_t add_sentences(std::vector<Sentence> batch) {
        std::set<std::string> ids;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            validate(batch[i], "record " + std::to_string(i));
            if (sentences_.count(batch[i].id) != 0 || !ids.insert(batch[i].id).second) {
                fail(ErrorKind::conflict, "duplicate sentence id '" + batch[i].id + "'");
            }
        }
        for (auto &s : batch) {
            auto id = s.id;
            sentences_.emplace(std::move(id), std::move(s));
        }
        return batch.size();
    }

    [[nodiscard]] const Sentence *find(std::string_view id) const {
        const auto it = sentences_.find(std::string(id));
        return it == sentences_.end() ? nullptr : &it->second;
    }

    [[nodiscard]] std::vector<const Sentence *> sentences(std::optional<CorpusKind> kind = std::nullopt) const {
        std::vector<const Sentence *> out;
        for (const auto &[id, s] : sentences_) {
            if (!kind || s.kind == *kind) {
                out.push_back(&s);
            }
        }
        return out;
    }

    [[nodiscard]] std::vector<TextItem> texts(CorpusKind kind) const {
        std::vector<TextItem> out;
        for (const auto *s : sentences(kind)) {
            out.push_back(TextItem{s->id, s->text});
        }
        return out;
    }

    [[nodiscard]] std::size_t size() const noexcept { return sentences_.size(); }

    // ---- labels --------------------------------------------------------

    /// Relabels every distant sentence from its outlet's configuration.
    /// Fails without modifying anything if some outlet is not covered.
    DistantLabelReport assign_distant_labels(const OutletRule &rule) {
        std::set<std::string> uncovered;
        for (const auto *s : sentences(CorpusKind::distant)) {
            const auto &o = outlets_.at(s->outlet_id);
            if (!rule.lookup(o.leaning, o.standard)) {
                uncovered.insert(o.id);
            }
        }
        if (!uncovered.empty()) {
            std::string msg = "outlet rule does not cover outlets:";
            for (const auto &id : uncovered) {
                msg += " " + id;
            }
            fail(ErrorKind::invalid, msg);
        }
        DistantLabelReport report;
        std::map<std::string, DistantLabel> labels;
        for (const auto *s : sentences(CorpusKind::distant)) {
            const auto &o = outlets_.at(s->outlet_id);
            const auto outcome = *rule.lookup(o.leaning, o.standard);
            if (outcome == RuleOutcome::exclude) {
                report.excluded.push_back(s->id);
                continue;
            }
            const Label label = outcome == RuleOutcome::biased ? Label::biased : Label::neutral;
            labels.emplace(s->id, DistantLabel{s->id, label, OutletRule::describe(o.leaning, o.standard, outcome)});
            ++report.labeled;
            ++(label == Label::biased ? report.biased : report.neutral);
        }
        distant_labels_ = std::move(labels);
        return report;
    }

    [[nodiscard]] const std::map<std::string, DistantLabel> &distant_labels() const noexcept {
        return distant_labels_;
    }

    void set_gold_label(std::string_view id, std::optional<Label> label) {
        const auto it = sentences_.find(std::string(id));
        if (it == sentences_.end()) {
            fail(ErrorKind::not_found, "unknown sentence '" + std::string(id) + "'");
        }
        it->second.gold_label = label;
    }

    /// Gold label if present, else the distant label.
    [[nodiscard]] std::optional<Label> label_of(std::string_view id) const {
        if (const auto *s = find(id); s != nullptr && s->gold_label) {
            return s->gold_label;
        }
        const auto it = distant_labels_.find(std::string(id));
        if (it != distant_labels_.end()) {
            return it->second.label;
        }
        return std::nullopt;
    }

    [[nodiscard]] std::vector<Collision> check_overlap(CorpusKind first, CorpusKind second) const {
        const auto a = texts(first);
        const auto b = texts(second);
        return biaslab::check_overlap(a, b);
    }

    // ---- splitting -----------------------------------------------------

    [[nodiscard]] SplitResult split(const SplitSpec &spec, CorpusKind kind) const {
        spec.validate();
        const auto pool = sentences(kind);
        if (pool.empty()) {
            fail(ErrorKind::invalid, "cannot split an empty " + std::string(to_string(kind)) + " corpus");
        }
        std::map<std::string, std::vector<std::string>> strata;
        for (const auto *s : pool) {
            std::string key;
            if (spec.stratify == StratifyBy::label) {
                const auto l = label_of(s->id);
                key = l ? std::string(to_string(*l)) : "unlabeled";
            } else if (spec.stratify == StratifyBy::topic) {
                key = s->topic;
            }
            strata[key].push_back(s->id);
        }
        Rng rng(spec.seed);
        SplitResult out;
        for (auto &[key, ids] : strata) {
            rng.shuffle(std::span<std::string>(ids));
            const auto n = ids.size();
            auto n_train = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
            auto n_val = static_cast<std::size_t>(std::llround(spec.validation * static_cast<double>(n)));
            n_train = std::min(n_train, n);
            n_val = std::min(n_val, n - n_train);
            if (spec.test == 0.0) {
                // rounding must not leak items into a zero-fraction test set
                n_val = spec.validation == 0.0 ? 0 : n - n_train;
                n_train = n - n_val;
            }
            for (std::size_t i = 0; i < n; ++i) {
                auto &dest = i < n_train ? out.train : i < n_train + n_val ? out.validation : out.test;
                dest.push_back(ids[i]);
            }
        }
        const auto check = [](double fraction, const std::vector<std::string> &set, const char *name) {
            if (fraction > 0.0 && set.empty()) {
                fail(ErrorKind::invalid, std::string("split: fraction for ") + name + " yields an empty set");
            }
        };
        check(spec.train, out.train, "train");
        check(spec.validation, out.validation, "validation");
        check(spec.test, out.test, "test");
        std::sort(out.train.begin(), out.train.end());
        std::sort(out.validation.begin(), out.validation.end());
        std::sort(out.test.begin(), out.test.end());
        return out;
    }

    // ---- serialization -------------------------------------------------

    [[nodiscard]] json to_json() const;
    static CorpusStore from_json(const json &j);

    /// Canonical text form of the whole store; equal stores dump equal bytes.
    [[nodiscard]] std::string dump() const { return to_json().dump(); }

  private:
    void validate(const Sentence &s, const std::string &where) const {
        if (s.id.empty()) {
            fail(ErrorKind::invalid, "malformed record: empty id, " + where);
        }
        if (detail::trim(s.text).empty()) {
            fail(ErrorKind::invalid, "malformed record: empty text, " + where);
        }
        if (outlets_.count(s.outlet_id) == 0) {
            fail(ErrorKind::not_found, "unknown outlet '" + s.outlet_id + "', " + where);
        }
        if (s.gold_label && s.kind != CorpusKind::gold) {
            fail(ErrorKind::invalid, "malformed record: label only allowed in gold corpora, " + where);
        }
    }

    Sentence parse_record(const std::string &line, std::size_t line_no, CorpusKind kind) const {
        const auto where = "line " + std::to_string(line_no);
        const auto malformed = [&](const std::string &why) {
            fail(ErrorKind::invalid, "malformed record (" + why + "), " + where);
        };
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error &) {
            malformed("invalid JSON");
        }
        if (!j.is_object()) {
            malformed("not an object");
        }
        const auto str_field = [&](const char *key) -> std::string {
            const auto it = j.find(key);
            if (it == j.end() || !it->is_string()) {
                malformed(std::string("missing string field '") + key + "'");
            }
            return it->get<std::string>();
        };
        Sentence s;
        s.kind = kind;
        s.id = str_field("id");
        s.text = str_field("text");
        s.outlet_id = str_field("outlet");
        s.topic = str_field("topic");
        if (const auto it = j.find("date"); it != j.end() && !it->is_null()) {
            if (!it->is_string()) {
                malformed("date must be a string or null");
            }
            s.date = parse_date(it->get<std::string>());
            if (!s.date) {
                malformed("date must be YYYY-MM-DD");
            }
        }
        if (const auto it = j.find("tags"); it != j.end() && !it->is_null()) {
            if (!it->is_array()) {
                malformed("tags must be a list of strings");
            }
            for (const auto &t : *it) {
                if (!t.is_string()) {
                    malformed("tags must be a list of strings");
                }
                s.tags.push_back(t.get<std::string>());
            }
        }
        if (const auto it = j.find("label"); it != j.end() && !it->is_null()) {
            if (!it->is_string()) {
                malformed("label must be biased|neutral");
            }
            try {
                s.gold_label = parse_label(it->get<std::string>());
            } catch (const Error &) {
                malformed("label must be biased|neutral");
            }
        }
        validate(s, where);
        return s;
    }

    std::map<std::string, Outlet> outlets_;
    std::map<std::string, Sentence> sentences_;
    std::map<std::string, DistantLabel> distant_labels_;
};

// ---- JSON --------------------------------------------------------------

inline void to_json(json &j, const Outlet &o) {
    j = json{{"id", o.id}, {"name", o.name}, {"leaning", to_string(o.leaning)}, {"standard", to_string(o.standard)}};
}

inline void from_json(const json &j, Outlet &o) {
    o.id = j.at("id").get<std::string>();
    o.name = j.value("name", std::string{});
    o.leaning = parse_leaning(j.at("leaning").get<std::string>());
    o.standard = parse_standard(j.at("standard").get<std::string>());
}

inline void to_json(json &j, const Sentence &s) {
    j = json{{"id", s.id},
             {"text", s.text},
             {"outlet", s.outlet_id},
             {"topic", s.topic},
             {"date", s.date ? json(format_date(*s.date)) : json(nullptr)},
             {"kind", to_string(s.kind)}};
    if (!s.tags.empty()) {
        j["tags"] = s.tags;
    }
    if (s.gold_label) {
        j["label"] = to_string(*s.gold_label);
    }
}

inline void from_json(const json &j, Sentence &s) {
    s.id = j.at("id").get<std::string>();
    s.text = j.at("text").get<std::string>();
    s.outlet_id = j.at("outlet").get<std::string>();
    s.topic = j.value("topic", std::string{});
    s.date.reset();
    if (const auto it = j.find("date"); it != j.end() && !it->is_null()) {
        s.date = parse_date(it->get<std::string>());
        if (!s.date) {
            fail(ErrorKind::invalid, "sentence '" + s.id + "': date must be YYYY-MM-DD");
        }
    }
    s.kind = parse_corpus_kind(j.value("kind", std::string("unlabeled")));
    s.tags = j.value("tags", std::vector<std::string>{});
    s.gold_label.reset();
    if (const auto it = j.find("label"); it != j.end() && !it->is_null()) {
        s.gold_label = parse_label(it->get<std::string>());
    }
}

inline void to_json(json &j, const DistantLabel &d) {
    j = json{{"sentence_id", d.sentence_id}, {"label", to_string(d.label)}, {"source_rule", d.source_rule}};
}

inline void from_json(const json &j, DistantLabel &d) {
    d.sentence_id = j.at("sentence_id").get<std::string>();
    d.label = parse_label(j.at("label").get<std::string>());
    d.source_rule = j.at("source_rule").get<std::string>();
}

inline void to_json(json &j, const SplitResult &s) {
    j = json{{"train", s.train}, {"validation", s.validation}, {"test", s.test}};
}

inline void from_json(const json &j, SplitResult &s) {
    s.train = j.at("train").get<std::vector<std::string>>();
    s.validation = j.at("validation").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
}

inline void to_json(json &j, const Collision &c) {
    j = json{{"first_id", c.first_id}, {"second_id", c.second_id}, {"normalized_text", c.normalized_text}};
}

inline json CorpusStore::to_json() const {
    json outlets = json::array();
    for (const auto &[id, o] : outlets_) {
        outlets.push_back(o);
    }
    json sentences = json::array();
    for (const auto &[id, s] : sentences_) {
        sentences.push_back(s);
    }
    json labels = json::array();
    for (const auto &[id, d] : distant_labels_) {
        labels.push_back(d);
    }
    return json{{"outlets", outlets}, {"sentences", sentences}, {"distant_labels", labels}};
}

inline CorpusStore CorpusStore::from_json(const json &j) {
    CorpusStore store;
    for (const auto &o : j.at("outlets")) {
        store.add_outlet(o.get<Outlet>());
    }
    std::vector<Sentence> sentences;
    for (const auto &s : j.at("sentences")) {
        sentences.push_back(s.get<Sentence>());
    }
    store.add_sentences(std::move(sentences));
    for (const auto &d : j.at("distant_labels")) {
        auto label = d.get<DistantLabel>();
        const auto *s = store.find(label.sentence_id);
        if (s == nullptr || s->kind != CorpusKind::distant) {
            fail(ErrorKind::invalid, "distant label for unknown or non-distant sentence '" + label.sentence_id + "'");
        }
        auto id = label.sentence_id;
        store.distant_labels_.emplace(std::move(id), std::move(label));
    }
    return store;
}

}  // namespace biaslab
