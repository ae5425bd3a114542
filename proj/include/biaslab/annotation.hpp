#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "biaslab/csv.hpp"
#include "biaslab/error.hpp"
#include "biaslab/textprep.hpp"
#include "biaslab/time.hpp"
#include "biaslab/types.hpp"

namespace biaslab {

using json = nlohmann::json;

enum class Role { crowdworker, expert, player };
enum class SentenceLabel { biased, neutral, skip };

namespace detail {
inline constexpr NameTable<Role, 3> role_names{
    {{Role::crowdworker, "crowdworker"}, {Role::expert, "expert"}, {Role::player, "player"}}};
inline constexpr NameTable<SentenceLabel, 3> sentence_label_names{
    {{SentenceLabel::biased, "biased"}, {SentenceLabel::neutral, "neutral"}, {SentenceLabel::skip, "skip"}}};
}  // namespace detail

inline std::string_view to_string(Role v) { return detail::name_of(detail::role_names, v); }
inline std::string_view to_string(SentenceLabel v) { return detail::name_of(detail::sentence_label_names, v); }
inline Role parse_role(std::string_view s) { return detail::parse_name(detail::role_names, s, "role"); }
inline SentenceLabel parse_sentence_label(std::string_view s) {
    return detail::parse_name(detail::sentence_label_names, s, "sentence label");
}

inline SentenceLabel to_sentence_label(Label l) noexcept {
    return l == Label::biased ? SentenceLabel::biased : SentenceLabel::neutral;
}

struct AnnotatorProfile {
    std::string id;
    Role role = Role::crowdworker;
    std::optional<int> age;
    std::optional<std::string> education;
    std::optional<int> ideology;
    std::optional<std::string> topic_knowledge;

    friend bool operator==(const AnnotatorProfile &, const AnnotatorProfile &) = default;
};

struct AnnotationRecord {
    std::string sentence_id;
    std::string annotator_id;
    SentenceLabel label = SentenceLabel::neutral;
    std::vector<std::size_t> biased_words;  // token indices, sorted and unique once stored
    TimePoint timestamp{};

    friend bool operator==(const AnnotationRecord &, const AnnotationRecord &) = default;
};

struct GoldLabel {
    std::string sentence_id;
    Label label = Label::neutral;
    std::size_t support = 0;  // annotators voting for `label`
    std::size_t total = 0;    // non-skip annotators

    friend bool operator==(const GoldLabel &, const GoldLabel &) = default;
};

struct GoldReport {
    std::vector<GoldLabel> labels;
    std::vector<std::string> tied;
    std::vector<std::string> under_annotated;

    friend bool operator==(const GoldReport &, const GoldReport &) = default;
};

/// Resolves a sentence id to its text; nullopt when the sentence is unknown.
using TextLookup = std::function<std::optional<std::string>(std::string_view)>;

inline constexpr std::string_view mbic_header =
    "sentence_id,annotator_id,role,sentence_label,biased_word_indices,age,education,ideology,topic_knowledge,timestamp";

/// Sentence- and word-level annotations plus annotator profiles. One store
/// holds one collection round, so (sentence, annotator) is unique.
///
/// Without a TextLookup the store runs detached from any corpus: sentence
/// existence and token ranges are not checked (used for offline agreement
/// computation over an exported CSV).
class AnnotationStore {
  public:
    explicit AnnotationStore(Tokenizer tokenizer = {}, TextLookup lookup = {})
        : tokenizer_(tokenizer), lookup_(std::move(lookup)) {}

    void set_text_lookup(TextLookup lookup) { lookup_ = std::move(lookup); }
    [[nodiscard]] const Tokenizer &tokenizer() const noexcept { return tokenizer_; }

    // ---- profiles ------------------------------------------------------

    /// Inserts a profile. Re-adding an identical profile is a no-op; a
    /// different profile under an existing id is a conflict.
    void add_profile(AnnotatorProfile profile) {
        validate_profile(profile);
        const auto it = profiles_.find(profile.id);
        if (it != profiles_.end()) {
            if (it->second == profile) {
                return;
            }
            fail(ErrorKind::conflict, "annotator '" + profile.id + "' already exists with a different profile");
        }
        auto id = profile.id;
        profiles_.emplace(std::move(id), std::move(profile));
    }

    [[nodiscard]] const AnnotatorProfile *find_profile(std::string_view id) const {
        const auto it = profiles_.find(std::string(id));
        return it == profiles_.end() ? nullptr : &it->second;
    }

    [[nodiscard]] const std::map<std::string, AnnotatorProfile> &profiles() const noexcept { return profiles_; }

    // ---- records -------------------------------------------------------

    /// Stores a record, replacing an earlier one by the same annotator for
    /// the same sentence. Returns the record id "<sentence>|<annotator>".
    std::string submit(AnnotationRecord record) {
        validate_record(record);
        auto id = record_id(record.sentence_id, record.annotator_id);
        records_[{record.sentence_id, record.annotator_id}] = std::move(record);
        return id;
    }

    static std::string record_id(std::string_view sentence_id, std::string_view annotator_id) {
        return std::string(sentence_id) + "|" + std::string(annotator_id);
    }

    [[nodiscard]] const AnnotationRecord *find_record(std::string_view sentence_id,
                                                      std::string_view annotator_id) const {
        const auto it = records_.find({std::string(sentence_id), std::string(annotator_id)});
        return it == records_.end() ? nullptr : &it->second;
    }

    /// All records ordered by (sentence id, annotator id).
    [[nodiscard]] std::vector<const AnnotationRecord *> records() const {
        std::vector<const AnnotationRecord *> out;
        out.reserve(records_.size());
        for (const auto &[key, r] : records_) {
            out.push_back(&r);
        }
        return out;
    }

    [[nodiscard]] std::vector<const AnnotationRecord *> records_for(std::string_view sentence_id) const {
        std::vector<const AnnotationRecord *> out;
        for (auto it = records_.lower_bound({std::string(sentence_id), std::string{}});
             it != records_.end() && it->first.first == sentence_id; ++it) {
            out.push_back(&it->second);
        }
        return out;
    }

    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }

    // ---- aggregation ---------------------------------------------------

    /// Strict-majority vote over non-skip labels. Sentences with fewer than
    /// `min_annotators` non-skip votes, or with a tie, get no gold label and
    /// are listed in the side report instead.
    [[nodiscard]] GoldReport aggregate_gold(std::span<const std::string> sentence_ids,
                                            std::size_t min_annotators) const {
        if (min_annotators < 1) {
            fail(ErrorKind::invalid, "min-annotators must be >= 1");
        }
        const std::set<std::string> ids(sentence_ids.begin(), sentence_ids.end());
        GoldReport report;
        for (const auto &id : ids) {
            std::size_t biased = 0, neutral = 0;
            for (const auto *r : records_for(id)) {
                biased += r->label == SentenceLabel::biased ? 1 : 0;
                neutral += r->label == SentenceLabel::neutral ? 1 : 0;
            }
            const auto total = biased + neutral;
            if (total < min_annotators) {
                report.under_annotated.push_back(id);
            } else if (2 * biased > total) {
                report.labels.push_back(GoldLabel{id, Label::biased, biased, total});
            } else if (2 * neutral > total) {
                report.labels.push_back(GoldLabel{id, Label::neutral, neutral, total});
            } else {
                report.tied.push_back(id);
            }
        }
        return report;
    }

    /// Sentence ids that carry at least one record.
    [[nodiscard]] std::vector<std::string> annotated_sentences() const {
        std::vector<std::string> out;
        for (const auto &[key, r] : records_) {
            if (out.empty() || out.back() != key.first) {
                out.push_back(key.first);
            }
        }
        return out;
    }

    /// Entry t = number of annotators marking token t as biased.
    [[nodiscard]] std::vector<std::size_t> word_label_histogram(std::string_view sentence_id) const {
        const auto text = lookup_text(sentence_id);
        std::vector<std::size_t> counts(tokenizer_.count_tokens(text), 0);
        for (const auto *r : records_for(sentence_id)) {
            for (const auto index : r->biased_words) {
                ++counts.at(index);
            }
        }
        return counts;
    }

    // ---- CSV -----------------------------------------------------------

    /// Writes one row per record, ordered by (sentence id, annotator id).
    std::size_t export_mbic(std::ostream &out) const {
        out << mbic_header << '\n';
        for (const auto &[key, r] : records_) {
            const auto &p = profiles_.at(r.annotator_id);
            std::string indices;
            for (std::size_t i = 0; i < r.biased_words.size(); ++i) {
                if (i != 0) {
                    indices += ';';
                }
                indices += std::to_string(r.biased_words[i]);
            }
            csv::write_row(out, {r.sentence_id, r.annotator_id, std::string(to_string(p.role)),
                                 std::string(to_string(r.label)), indices, p.age ? std::to_string(*p.age) : "",
                                 p.education.value_or(""), p.ideology ? std::to_string(*p.ideology) : "",
                                 p.topic_knowledge.value_or(""), format_rfc3339(r.timestamp)});
        }
        return records_.size();
    }

    std::size_t export_mbic(const std::string &path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            fail(ErrorKind::io, "cannot write '" + path + "'");
        }
        const auto n = export_mbic(out);
        out.flush();
        if (!out) {
            fail(ErrorKind::io, "write to '" + path + "' failed");
        }
        return n;
    }

    /// Reads the export format back. Profiles are created on first sight and
    /// must agree across rows. All-or-nothing.
    std::size_t import_csv(std::istream &in) {
        const auto rows = csv::parse(in);
        if (rows.empty() || join(rows.front().fields) != mbic_header) {
            fail(ErrorKind::invalid, "annotation csv: expected header " + std::string(mbic_header));
        }
        AnnotationStore staged = *this;
        std::set<std::pair<std::string, std::string>> seen;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto &f = rows[i].fields;
            const auto where = ", line " + std::to_string(rows[i].line);
            try {
                if (f.size() != 10) {
                    fail(ErrorKind::invalid, "expected 10 fields");
                }
                AnnotatorProfile p;
                p.id = f[1];
                p.role = parse_role(f[2]);
                p.age = parse_optional_int(f[5], "age");
                if (!f[6].empty()) p.education = f[6];
                p.ideology = parse_optional_int(f[7], "ideology");
                if (!f[8].empty()) p.topic_knowledge = f[8];
                staged.add_profile(std::move(p));

                AnnotationRecord r;
                r.sentence_id = f[0];
                r.annotator_id = f[1];
                r.label = parse_sentence_label(f[3]);
                r.biased_words = parse_indices(f[4]);
                r.timestamp = parse_rfc3339(f[9]);
                if (!seen.emplace(r.sentence_id, r.annotator_id).second) {
                    fail(ErrorKind::conflict, "duplicate record for (" + r.sentence_id + ", " + r.annotator_id + ")");
                }
                staged.submit(std::move(r));
            } catch (const Error &e) {
                fail(e.kind(), std::string("annotation csv: ") + e.what() + where);
            }
        }
        *this = std::move(staged);
        return rows.size() - 1;
    }

    std::size_t import_csv(const std::string &path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            fail(ErrorKind::io, "cannot open '" + path + "'");
        }
        return import_csv(in);
    }

    [[nodiscard]] json to_json() const;
    void load_json(const json &j);

  private:
    static std::string join(const std::vector<std::string> &fields) {
        std::string out;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            out += (i == 0 ? "" : ",") + fields[i];
        }
        return out;
    }

    static std::optional<int> parse_optional_int(const std::string &s, const char *what) {
        if (s.empty()) {
            return std::nullopt;
        }
        int v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            fail(ErrorKind::invalid, std::string("malformed ") + what + " '" + s + "'");
        }
        return v;
    }

    static std::vector<std::size_t> parse_indices(const std::string &s) {
        std::vector<std::size_t> out;
        if (s.empty()) {
            return out;
        }
        std::size_t start = 0;
        while (start <= s.size()) {
            const auto end = std::min(s.find(';', start), s.size());
            std::size_t v = 0;
            const auto [ptr, ec] = std::from_chars(s.data() + start, s.data() + end, v);
            if (ec != std::errc{} || ptr != s.data() + end) {
                fail(ErrorKind::invalid, "malformed word index list '" + s + "'");
            }
            out.push_back(v);
            start = end + 1;
        }
        return out;
    }

    static void validate_profile(const AnnotatorProfile &p) {
        if (p.id.empty()) {
            fail(ErrorKind::invalid, "annotator id must be non-empty");
        }
        if (p.age && *p.age <= 0) {
            fail(ErrorKind::invalid, "annotator '" + p.id + "': age must be positive");
        }
    }

    std::string lookup_text(std::string_view sentence_id) const {
        if (!lookup_) {
            fail(ErrorKind::invalid, "annotation store has no sentence source");
        }
        auto text = lookup_(sentence_id);
        if (!text) {
            fail(ErrorKind::not_found, "unknown sentence '" + std::string(sentence_id) + "'");
        }
        return *text;
    }

    void validate_record(AnnotationRecord &r) const {
        if (find_profile(r.annotator_id) == nullptr) {
            fail(ErrorKind::not_found, "unknown annotator '" + r.annotator_id + "'");
        }
        if (r.sentence_id.empty()) {
            fail(ErrorKind::invalid, "sentence id must be non-empty");
        }
        if (r.label != SentenceLabel::biased && !r.biased_words.empty()) {
            fail(ErrorKind::invalid, "biased words must be empty for a " + std::string(to_string(r.label)) + " label");
        }
        std::sort(r.biased_words.begin(), r.biased_words.end());
        r.biased_words.erase(std::unique(r.biased_words.begin(), r.biased_words.end()), r.biased_words.end());
        if (lookup_) {
            const auto tokens = tokenizer_.count_tokens(lookup_text(r.sentence_id));
            for (const auto index : r.biased_words) {
                if (index >= tokens) {
                    fail(ErrorKind::invalid, "word index " + std::to_string(index) + " out of range for a " +
                                                 std::to_string(tokens) + "-token sentence");
                }
            }
        }
    }

    Tokenizer tokenizer_;
    TextLookup lookup_;
    std::map<std::string, AnnotatorProfile> profiles_;
    std::map<std::pair<std::string, std::string>, AnnotationRecord> records_;
};

// ---- JSON --------------------------------------------------------------

namespace detail {
template <class T>
json optional_json(const std::optional<T> &v) {
    return v ? json(*v) : json(nullptr);
}
template <class T>
std::optional<T> json_optional(const json &j, const char *key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        return std::nullopt;
    }
    return it->get<T>();
}
}  // namespace detail

inline void to_json(json &j, const AnnotatorProfile &p) {
    j = json{{"id", p.id},
             {"role", to_string(p.role)},
             {"age", detail::optional_json(p.age)},
             {"education", detail::optional_json(p.education)},
             {"ideology", detail::optional_json(p.ideology)},
             {"topic_knowledge", detail::optional_json(p.topic_knowledge)}};
}

inline void from_json(const json &j, AnnotatorProfile &p) {
    p.id = j.at("id").get<std::string>();
    p.role = parse_role(j.at("role").get<std::string>());
    p.age = detail::json_optional<int>(j, "age");
    p.education = detail::json_optional<std::string>(j, "education");
    p.ideology = detail::json_optional<int>(j, "ideology");
    p.topic_knowledge = detail::json_optional<std::string>(j, "topic_knowledge");
}

inline void to_json(json &j, const AnnotationRecord &r) {
    j = json{{"sentence_id", r.sentence_id},
             {"annotator_id", r.annotator_id},
             {"sentence_label", to_string(r.label)},
             {"biased_words", r.biased_words},
             {"timestamp", format_rfc3339(r.timestamp)}};
}

inline void from_json(const json &j, AnnotationRecord &r) {
    r.sentence_id = j.at("sentence_id").get<std::string>();
    r.annotator_id = j.at("annotator_id").get<std::string>();
    r.label = parse_sentence_label(j.at("sentence_label").get<std::string>());
    r.biased_words = j.value("biased_words", std::vector<std::size_t>{});
    r.timestamp = parse_rfc3339(j.at("timestamp").get<std::string>());
}

inline void to_json(json &j, const GoldLabel &g) {
    j = json{{"sentence_id", g.sentence_id}, {"label", to_string(g.label)}, {"support", g.support}, {"total", g.total}};
}

inline void to_json(json &j, const GoldReport &r) {
    j = json{{"labels", r.labels}, {"tied", r.tied}, {"under_annotated", r.under_annotated}};
}

inline json AnnotationStore::to_json() const {
    json profiles = json::array();
    for (const auto &[id, p] : profiles_) {
        profiles.push_back(p);
    }
    json records = json::array();
    for (const auto &[key, r] : records_) {
        records.push_back(r);
    }
    return json{{"tokenizer", tokenizer_.version()}, {"profiles", profiles}, {"records", records}};
}

inline void AnnotationStore::load_json(const json &j) {
    if (j.at("tokenizer").get<std::string>() != tokenizer_.version()) {
        fail(ErrorKind::invalid, "annotation store was written with tokenizer " +
                                     j.at("tokenizer").get<std::string>() + ", expected " + tokenizer_.version());
    }
    profiles_.clear();
    records_.clear();
    for (const auto &p : j.at("profiles")) {
        add_profile(p.get<AnnotatorProfile>());
    }
    for (const auto &r : j.at("records")) {
        submit(r.get<AnnotationRecord>());
    }
}

}  // namespace biaslab
