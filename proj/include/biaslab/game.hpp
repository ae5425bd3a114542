#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "biaslab/annotation.hpp"
#include "biaslab/error.hpp"
#include "biaslab/random.hpp"
#include "biaslab/textprep.hpp"
#include "biaslab/time.hpp"
#include "biaslab/types.hpp"

namespace biaslab {

enum class Round { tutorial, calibration, production, authoring };
enum class SessionState { active, completed, abandoned };
enum class Agreement { match, mismatch, pending };
enum class Reference { expert, peer_consensus };
enum class ServeKind { tutorial_step, sentence, authoring_prompt, finished };

namespace detail {
inline constexpr NameTable<Round, 4> round_names{{{Round::tutorial, "tutorial"},
                                                  {Round::calibration, "calibration"},
                                                  {Round::production, "production"},
                                                  {Round::authoring, "authoring"}}};
inline constexpr NameTable<SessionState, 3> session_state_names{
    {{SessionState::active, "active"}, {SessionState::completed, "completed"}, {SessionState::abandoned, "abandoned"}}};
inline constexpr NameTable<Agreement, 3> agreement_names{
    {{Agreement::match, "match"}, {Agreement::mismatch, "mismatch"}, {Agreement::pending, "pending"}}};
inline constexpr NameTable<Reference, 2> reference_names{
    {{Reference::expert, "expert"}, {Reference::peer_consensus, "peer-consensus"}}};
inline constexpr NameTable<ServeKind, 4> serve_kind_names{{{ServeKind::tutorial_step, "tutorial-step"},
                                                           {ServeKind::sentence, "sentence"},
                                                           {ServeKind::authoring_prompt, "authoring-prompt"},
                                                           {ServeKind::finished, "finished"}}};
}  // namespace detail

inline std::string_view to_string(Round v) { return detail::name_of(detail::round_names, v); }
inline std::string_view to_string(SessionState v) { return detail::name_of(detail::session_state_names, v); }
inline std::string_view to_string(Agreement v) { return detail::name_of(detail::agreement_names, v); }
inline std::string_view to_string(Reference v) { return detail::name_of(detail::reference_names, v); }
inline std::string_view to_string(ServeKind v) { return detail::name_of(detail::serve_kind_names, v); }
inline Round parse_round(std::string_view s) { return detail::parse_name(detail::round_names, s, "round"); }
inline SessionState parse_session_state(std::string_view s) {
    return detail::parse_name(detail::session_state_names, s, "session state");
}

struct GameConfig {
    int expert_match_points = 10;
    int peer_match_points = 5;
    int authored_rating_points = 2;
    std::size_t quorum = 3;
    std::size_t calibration_items = 5;
    std::size_t production_batch = 5;
    std::uint64_t seed = 1;
    std::vector<std::string> tutorial_steps{
        "Media bias by word choice: the same event can be described with neutral or loaded words.",
        "Read each sentence and decide whether it is biased or neutral.",
        "If it is biased, mark the words that carry the bias.",
        "Early sentences have expert answers and you get direct feedback. Later ones are scored by agreement "
        "with other players.",
        "Points: matching the expert or the player majority earns points. The leaderboard ranks total points."};

    friend bool operator==(const GameConfig &, const GameConfig &) = default;

    void validate() const {
        if (quorum < 1 || production_batch < 1) {
            fail(ErrorKind::invalid, "game config: quorum and production batch must be >= 1");
        }
        if (expert_match_points < 0 || peer_match_points < 0 || authored_rating_points < 0) {
            fail(ErrorKind::invalid, "game config: point values must be non-negative");
        }
    }
};

/// A gold sentence with its expert answer; the only kind of item the
/// calibration round serves.
struct CalibrationItem {
    std::string sentence_id;
    std::string text;
    Label expert_label = Label::neutral;
    std::vector<std::size_t> expert_biased_words;
};

struct PoolItem {
    std::string sentence_id;
    std::string text;
};

struct PeerRating {
    std::string player_id;
    Label label = Label::neutral;

    friend bool operator==(const PeerRating &, const PeerRating &) = default;
};

struct AuthoredSentence {
    std::string id;
    std::string author_player_id;
    std::string session_id;
    std::string text;
    std::vector<PeerRating> peer_ratings;
    TimePoint created{};
};

struct Feedback {
    std::string item_id;
    Agreement agreement = Agreement::pending;
    Reference reference = Reference::expert;
    int points_awarded = 0;
    std::string explanation;

    friend bool operator==(const Feedback &, const Feedback &) = default;
};

struct GameSession {
    std::string id;
    std::string player_id;
    Round round = Round::tutorial;
    std::vector<std::string> items_served;
    int score = 0;
    SessionState state = SessionState::active;

    std::uint64_t seed = 0;
    std::size_t tutorial_acknowledged = 0;
    std::optional<std::string> outstanding;  // served, not yet answered
    std::set<std::string> answered;
    std::size_t calibration_answered = 0;
    std::size_t production_answered = 0;
    bool authoring_unlocked = false;
    bool authoring_prompted = false;
    TimePoint started{};
    TimePoint last_activity{};
};

struct Served {
    ServeKind kind = ServeKind::finished;
    std::string session_id;
    Round round = Round::tutorial;
    std::size_t step = 0;  // tutorial step index
    std::optional<std::string> sentence_id;
    std::string text;
};

struct LeaderboardEntry {
    std::string player_id;
    int score = 0;
    std::optional<TimePoint> last_scored;

    friend bool operator==(const LeaderboardEntry &, const LeaderboardEntry &) = default;
};

/// One line of the replayable session log.
struct LogEntry {
    std::size_t seq = 0;
    TimePoint time{};
    std::string session_id;
    std::string action;  // start | serve | tutorial | answer | authored | settle | expire
    std::optional<std::string> item;
    std::optional<Label> label;
    std::optional<Label> reference_label;
    std::optional<Feedback> feedback;
    Round round = Round::tutorial;
    int score = 0;
};

/// The four-round annotation game. Holds sessions, item pools, peer votes,
/// and authored sentences; annotations themselves go to the AnnotationStore
/// passed into each mutating call. Not thread-safe: callers serialize.
class Game {
  public:
    explicit Game(GameConfig config = {}, Tokenizer tokenizer = {})
        : config_(std::move(config)), tokenizer_(tokenizer) {
        config_.validate();
    }

    [[nodiscard]] const GameConfig &config() const noexcept { return config_; }

    void set_calibration_pool(std::vector<CalibrationItem> items) {
        calibration_.clear();
        for (auto &item : items) {
            auto id = item.sentence_id;
            calibration_.emplace(std::move(id), std::move(item));
        }
    }

    void set_production_pool(std::vector<PoolItem> items) {
        production_.clear();
        for (auto &item : items) {
            auto id = item.sentence_id;
            production_.emplace(std::move(id), std::move(item.text));
        }
    }

    [[nodiscard]] std::size_t calibration_pool_size() const noexcept { return calibration_.size(); }
    [[nodiscard]] std::size_t production_pool_size() const noexcept { return production_.size(); }

    // ---- sessions ------------------------------------------------------

    GameSession &start_session(const AnnotationStore &store, std::string_view player_id, TimePoint now) {
        const auto *profile = store.find_profile(player_id);
        if (profile == nullptr) {
            fail(ErrorKind::not_found, "unknown player '" + std::string(player_id) + "'");
        }
        if (profile->role != Role::player) {
            fail(ErrorKind::invalid, "annotator '" + std::string(player_id) + "' is not a player");
        }
        for (const auto &[id, s] : sessions_) {
            if (s.player_id == player_id && s.state == SessionState::active) {
                fail(ErrorKind::conflict, "player '" + std::string(player_id) + "' already has active session '" +
                                              id + "'");
            }
        }
        GameSession s;
        s.id = "session-" + std::to_string(++session_counter_);
        s.player_id = std::string(player_id);
        s.seed = Fnv1a().u64(config_.seed).text(s.id).value();
        s.started = now;
        s.last_activity = now;
        if (config_.tutorial_steps.empty()) {
            s.round = config_.calibration_items == 0 ? Round::production : Round::calibration;
        }
        auto id = s.id;
        auto &stored = sessions_.emplace(std::move(id), std::move(s)).first->second;
        log(now, stored, "start");
        return stored;
    }

    [[nodiscard]] const GameSession *find_session(std::string_view id) const {
        const auto it = sessions_.find(std::string(id));
        return it == sessions_.end() ? nullptr : &it->second;
    }

    [[nodiscard]] const GameSession &session(std::string_view id) const {
        const auto *s = find_session(id);
        if (s == nullptr) {
            fail(ErrorKind::not_found, "unknown session '" + std::string(id) + "'");
        }
        return *s;
    }

    [[nodiscard]] const std::map<std::string, GameSession> &sessions() const noexcept { return sessions_; }

    /// Next thing to show. Re-serving while an item is outstanding returns
    /// the same item without recording a second serve. Exhausted pools
    /// advance the round or complete the session.
    Served serve_next(const AnnotationStore &store, std::string_view session_id, TimePoint now) {
        auto &s = active_session(session_id);
        s.last_activity = now;
        Served out;
        out.session_id = s.id;
        if (s.round == Round::tutorial) {
            out.kind = ServeKind::tutorial_step;
            out.round = s.round;
            out.step = s.tutorial_acknowledged;
            out.text = config_.tutorial_steps.at(s.tutorial_acknowledged);
            return out;
        }
        if (s.outstanding) {
            return sentence_served(s, *s.outstanding);
        }
        while (true) {
            if (s.round == Round::calibration && s.calibration_answered >= config_.calibration_items) {
                s.round = Round::production;
            }
            if (s.round == Round::authoring && !s.authoring_prompted) {
                s.authoring_prompted = true;
                out.kind = ServeKind::authoring_prompt;
                out.round = s.round;
                out.text = "Write a sentence for other players to rate.";
                log(now, s, "serve");
                return out;
            }
            const auto candidates = eligible(store, s);
            if (!candidates.empty()) {
                Rng rng(Fnv1a()
                            .u64(s.seed)
                            .u64(static_cast<std::uint64_t>(s.round))
                            .u64(s.items_served.size())
                            .value());
                const auto &pick = candidates[rng.uniform_index(candidates.size())];
                s.items_served.push_back(pick);
                s.outstanding = pick;
                auto &entry = log(now, s, "serve");
                entry.item = pick;
                return sentence_served(s, pick);
            }
            if (s.round == Round::calibration) {
                s.round = Round::production;
                continue;
            }
            s.state = SessionState::completed;
            out.kind = ServeKind::finished;
            out.round = s.round;
            log(now, s, "complete");
            return out;
        }
    }

    /// Acknowledges tutorial steps in order; the last one opens calibration.
    void acknowledge_tutorial(std::string_view session_id, std::size_t step, TimePoint now) {
        auto &s = active_session(session_id);
        if (s.round != Round::tutorial) {
            fail(ErrorKind::conflict, "session '" + s.id + "' has finished the tutorial");
        }
        if (step != s.tutorial_acknowledged) {
            fail(ErrorKind::conflict, "tutorial step " + std::to_string(step) + " acknowledged out of order; expected " +
                                          std::to_string(s.tutorial_acknowledged));
        }
        s.last_activity = now;
        ++s.tutorial_acknowledged;
        if (s.tutorial_acknowledged == config_.tutorial_steps.size()) {
            s.round = config_.calibration_items == 0 ? Round::production : Round::calibration;
        }
        log(now, s, "tutorial");
    }

    /// Records an answer for the outstanding item and scores it.
    Feedback submit_answer(AnnotationStore &store, std::string_view session_id, std::string_view sentence_id,
                           Label label, std::vector<std::size_t> biased_words, TimePoint now) {
        auto &s = active_session(session_id);
        const std::string item(sentence_id);
        if (s.answered.count(item) != 0) {
            fail(ErrorKind::conflict, "item '" + item + "' already answered in session '" + s.id + "'");
        }
        if (!s.outstanding || *s.outstanding != item) {
            fail(ErrorKind::conflict, "item '" + item + "' was not served to session '" + s.id + "'");
        }
        if (store.find_record(item, s.player_id) != nullptr) {
            fail(ErrorKind::conflict, "player '" + s.player_id + "' already annotated '" + item + "'");
        }
        AnnotationRecord record;
        record.sentence_id = item;
        record.annotator_id = s.player_id;
        record.label = to_sentence_label(label);
        record.biased_words = std::move(biased_words);
        record.timestamp = now;
        store.submit(std::move(record));  // validates word indices before any game state changes

        s.outstanding.reset();
        s.answered.insert(item);
        s.last_activity = now;
        Feedback fb;
        fb.item_id = item;
        std::optional<Label> reference_label;
        if (s.round == Round::calibration) {
            const auto &cal = calibration_.at(item);
            reference_label = cal.expert_label;
            fb.reference = Reference::expert;
            fb.agreement = label == cal.expert_label ? Agreement::match : Agreement::mismatch;
            fb.points_awarded = fb.agreement == Agreement::match ? config_.expert_match_points : 0;
            fb.explanation = explain_expert(cal);
            award(s, fb.points_awarded, now);
            ++s.calibration_answered;
            if (s.calibration_answered >= config_.calibration_items) {
                s.round = Round::production;
            }
        } else {
            fb.reference = Reference::peer_consensus;
            ++s.production_answered;
            if (const auto it = authored_.find(item); it != authored_.end()) {
                it->second.peer_ratings.push_back(PeerRating{s.player_id, label});
                award(sessions_.at(it->second.session_id), config_.authored_rating_points, now);
            }
            fb = vote(s, item, label, now);
            if (s.round == Round::production && s.production_answered >= config_.production_batch) {
                s.round = Round::authoring;
                s.authoring_unlocked = true;
            }
        }
        auto &entry = log(now, s, "answer");
        entry.item = item;
        entry.label = label;
        entry.reference_label = reference_label;
        entry.feedback = fb;
        return fb;
    }

    /// Adds a player-written sentence to the peer-rating pool.
    const AuthoredSentence &submit_authored(std::string_view session_id, std::string text, TimePoint now) {
        auto &s = active_session(session_id);
        if (!s.authoring_unlocked) {
            fail(ErrorKind::conflict, "authoring is not unlocked for session '" + s.id + "'");
        }
        if (normalize_for_matching(text).empty() || tokenizer_.count_tokens(text) == 0) {
            fail(ErrorKind::invalid, "authored text must contain at least one word");
        }
        AuthoredSentence a;
        a.id = "authored-" + std::to_string(++authored_counter_);
        a.author_player_id = s.player_id;
        a.session_id = s.id;
        a.text = std::move(text);
        a.created = now;
        s.last_activity = now;
        auto id = a.id;
        const auto &stored = authored_.emplace(std::move(id), std::move(a)).first->second;
        auto &entry = log(now, s, "authored");
        entry.item = stored.id;
        return stored;
    }

    [[nodiscard]] const std::map<std::string, AuthoredSentence> &authored() const noexcept { return authored_; }

    [[nodiscard]] const AuthoredSentence *find_authored(std::string_view id) const {
        const auto it = authored_.find(std::string(id));
        return it == authored_.end() ? nullptr : &it->second;
    }

    /// Text of any sentence the game can serve.
    [[nodiscard]] std::optional<std::string> text_of(std::string_view id) const {
        const std::string key(id);
        if (const auto it = authored_.find(key); it != authored_.end()) return it->second.text;
        if (const auto it = production_.find(key); it != production_.end()) return it->second;
        if (const auto it = calibration_.find(key); it != calibration_.end()) return it->second.text;
        return std::nullopt;
    }

    /// Abandons active sessions idle for longer than `ttl`; their outstanding
    /// items are released. Returns the abandoned session ids.
    std::vector<std::string> expire_sessions(TimePoint now, std::chrono::milliseconds ttl) {
        std::vector<std::string> out;
        for (auto &[id, s] : sessions_) {
            if (s.state == SessionState::active && now - s.last_activity > ttl) {
                s.state = SessionState::abandoned;
                s.outstanding.reset();
                out.push_back(id);
                log(now, s, "expire");
            }
        }
        return out;
    }

    // ---- scores --------------------------------------------------------

    /// Players by total score desc, then earlier last-score time, then id.
    [[nodiscard]] std::vector<LeaderboardEntry> leaderboard(std::size_t top_n) const {
        std::map<std::string, LeaderboardEntry> totals;
        for (const auto &[id, s] : sessions_) {
            auto &e = totals[s.player_id];
            e.player_id = s.player_id;
            e.score += s.score;
        }
        for (auto &[player, e] : totals) {
            if (const auto it = last_scored_.find(player); it != last_scored_.end()) {
                e.last_scored = it->second;
            }
        }
        std::vector<LeaderboardEntry> out;
        for (auto &[player, e] : totals) {
            out.push_back(std::move(e));
        }
        std::sort(out.begin(), out.end(), [](const LeaderboardEntry &a, const LeaderboardEntry &b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.last_scored != b.last_scored) {
                if (!a.last_scored) return false;
                if (!b.last_scored) return true;
                return *a.last_scored < *b.last_scored;
            }
            return a.player_id < b.player_id;
        });
        if (out.size() > top_n) {
            out.resize(top_n);
        }
        return out;
    }

    /// Peer consensus for an item once quorum gave a strict majority.
    [[nodiscard]] std::optional<Label> consensus(std::string_view item) const {
        const auto it = votes_.find(std::string(item));
        return it == votes_.end() ? std::nullopt : it->second.consensus;
    }

    [[nodiscard]] const std::vector<LogEntry> &log_entries() const noexcept { return log_; }

    void export_log(std::ostream &out) const;

    [[nodiscard]] nlohmann::json to_json() const;
    void load_json(const nlohmann::json &j);

  private:
    struct Vote {
        std::string session_id;
        std::string player_id;
        Label label = Label::neutral;
        bool settled = false;
    };

    struct VoteBox {
        std::vector<Vote> votes;
        std::optional<Label> consensus;
    };

    GameSession &active_session(std::string_view id) {
        const auto it = sessions_.find(std::string(id));
        if (it == sessions_.end()) {
            fail(ErrorKind::not_found, "unknown session '" + std::string(id) + "'");
        }
        if (it->second.state != SessionState::active) {
            fail(ErrorKind::conflict,
                 "session '" + it->first + "' is " + std::string(to_string(it->second.state)));
        }
        return it->second;
    }

    Served sentence_served(const GameSession &s, const std::string &item) const {
        Served out;
        out.kind = ServeKind::sentence;
        out.session_id = s.id;
        out.round = s.round;
        out.sentence_id = item;
        out.text = *text_of(item);
        return out;
    }

    /// Sorted candidate ids for the session's current round.
    std::vector<std::string> eligible(const AnnotationStore &store, const GameSession &s) const {
        std::vector<std::string> out;
        const auto usable = [&](const std::string &id) {
            return std::find(s.items_served.begin(), s.items_served.end(), id) == s.items_served.end() &&
                   store.find_record(id, s.player_id) == nullptr;
        };
        if (s.round == Round::calibration) {
            for (const auto &[id, item] : calibration_) {
                if (usable(id)) out.push_back(id);
            }
            return out;
        }
        for (const auto &[id, text] : production_) {
            if (usable(id)) out.push_back(id);
        }
        for (const auto &[id, a] : authored_) {
            if (a.author_player_id != s.player_id && usable(id)) out.push_back(id);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    std::string explain_expert(const CalibrationItem &cal) const {
        std::string out = "Expert label: " + std::string(to_string(cal.expert_label)) + ".";
        if (!cal.expert_biased_words.empty()) {
            const auto tokens = tokenizer_.tokenize(cal.text);
            out += " Expert biased words:";
            for (const auto index : cal.expert_biased_words) {
                if (index < tokens.size()) {
                    out += " " + tokens[index];
                }
            }
            out += ".";
        }
        return out;
    }

    void award(GameSession &s, int points, TimePoint now) {
        if (points <= 0) {
            return;
        }
        s.score += points;
        last_scored_[s.player_id] = now;
    }

    Feedback vote(GameSession &s, const std::string &item, Label label, TimePoint now) {
        auto &box = votes_[item];
        box.votes.push_back(Vote{s.id, s.player_id, label, false});
        if (!box.consensus && box.votes.size() >= config_.quorum) {
            std::size_t biased = 0;
            for (const auto &v : box.votes) {
                biased += v.label == Label::biased ? 1 : 0;
            }
            const auto total = box.votes.size();
            if (2 * biased > total) {
                box.consensus = Label::biased;
            } else if (2 * (total - biased) > total) {
                box.consensus = Label::neutral;
            }
        }
        Feedback mine{item, Agreement::pending, Reference::peer_consensus, 0,
                      "Waiting for more players to rate this sentence."};
        if (!box.consensus) {
            return mine;
        }
        for (auto &v : box.votes) {
            if (v.settled) {
                continue;
            }
            v.settled = true;
            const bool match = v.label == *box.consensus;
            const int points = match ? config_.peer_match_points : 0;
            auto &voter = sessions_.at(v.session_id);
            award(voter, points, now);
            Feedback fb{item, match ? Agreement::match : Agreement::mismatch, Reference::peer_consensus, points,
                        "Player majority: " + std::string(to_string(*box.consensus)) + "."};
            if (v.session_id == s.id) {
                mine = fb;
            } else {
                auto &entry = log(now, voter, "settle");
                entry.item = item;
                entry.label = v.label;
                entry.reference_label = box.consensus;
                entry.feedback = fb;
            }
        }
        return mine;
    }

    LogEntry &log(TimePoint now, const GameSession &s, std::string action) {
        LogEntry e;
        e.seq = log_.size() + 1;
        e.time = now;
        e.session_id = s.id;
        e.action = std::move(action);
        e.round = s.round;
        e.score = s.score;
        log_.push_back(std::move(e));
        return log_.back();
    }

    GameConfig config_;
    Tokenizer tokenizer_;
    std::map<std::string, CalibrationItem> calibration_;
    std::map<std::string, std::string> production_;
    std::map<std::string, GameSession> sessions_;
    std::map<std::string, AuthoredSentence> authored_;
    std::map<std::string, VoteBox> votes_;
    std::map<std::string, TimePoint> last_scored_;
    std::vector<LogEntry> log_;
    std::size_t session_counter_ = 0;
    std::size_t authored_counter_ = 0;
};

// ---- JSON --------------------------------------------------------------

inline void to_json(nlohmann::json &j, const GameConfig &c) {
    j = nlohmann::json{{"expert_match_points", c.expert_match_points},
                       {"peer_match_points", c.peer_match_points},
                       {"authored_rating_points", c.authored_rating_points},
                       {"quorum", c.quorum},
                       {"calibration_items", c.calibration_items},
                       {"production_batch", c.production_batch},
                       {"seed", c.seed},
                       {"tutorial_steps", c.tutorial_steps}};
}

/// Absent keys keep their defaults.
inline void from_json(const nlohmann::json &j, GameConfig &c) {
    c.expert_match_points = j.value("expert_match_points", c.expert_match_points);
    c.peer_match_points = j.value("peer_match_points", c.peer_match_points);
    c.authored_rating_points = j.value("authored_rating_points", c.authored_rating_points);
    c.quorum = j.value("quorum", c.quorum);
    c.calibration_items = j.value("calibration_items", c.calibration_items);
    c.production_batch = j.value("production_batch", c.production_batch);
    c.seed = j.value("seed", c.seed);
    c.tutorial_steps = j.value("tutorial_steps", c.tutorial_steps);
    c.validate();
}

inline void to_json(nlohmann::json &j, const Feedback &f) {
    j = nlohmann::json{{"item_id", f.item_id},
                       {"agreement", to_string(f.agreement)},
                       {"reference", to_string(f.reference)},
                       {"points_awarded", f.points_awarded},
                       {"explanation", f.explanation}};
}

inline void from_json(const nlohmann::json &j, Feedback &f) {
    f.item_id = j.at("item_id").get<std::string>();
    f.agreement = detail::parse_name(detail::agreement_names, j.at("agreement").get<std::string>(), "agreement");
    f.reference = detail::parse_name(detail::reference_names, j.at("reference").get<std::string>(), "reference");
    f.points_awarded = j.at("points_awarded").get<int>();
    f.explanation = j.at("explanation").get<std::string>();
}

inline void to_json(nlohmann::json &j, const GameSession &s) {
    j = nlohmann::json{{"id", s.id},
                       {"player_id", s.player_id},
                       {"round", to_string(s.round)},
                       {"items_served", s.items_served},
                       {"score", s.score},
                       {"state", to_string(s.state)},
                       {"tutorial_acknowledged", s.tutorial_acknowledged},
                       {"outstanding", s.outstanding ? nlohmann::json(*s.outstanding) : nlohmann::json(nullptr)},
                       {"authoring_unlocked", s.authoring_unlocked},
                       {"started", format_rfc3339(s.started)},
                       {"last_activity", format_rfc3339(s.last_activity)}};
}

inline void to_json(nlohmann::json &j, const Served &s) {
    j = nlohmann::json{{"kind", to_string(s.kind)}, {"session_id", s.session_id}, {"round", to_string(s.round)}};
    if (s.kind == ServeKind::tutorial_step) {
        j["step"] = s.step;
    }
    if (s.sentence_id) {
        j["sentence_id"] = *s.sentence_id;
    }
    if (!s.text.empty()) {
        j["text"] = s.text;
    }
}

inline void to_json(nlohmann::json &j, const AuthoredSentence &a) {
    nlohmann::json ratings = nlohmann::json::array();
    for (const auto &r : a.peer_ratings) {
        ratings.push_back({{"player_id", r.player_id}, {"label", to_string(r.label)}});
    }
    j = nlohmann::json{{"id", a.id},
                       {"author_player_id", a.author_player_id},
                       {"session_id", a.session_id},
                       {"text", a.text},
                       {"peer_ratings", ratings},
                       {"created", format_rfc3339(a.created)}};
}

inline void to_json(nlohmann::json &j, const LeaderboardEntry &e) {
    j = nlohmann::json{{"player_id", e.player_id},
                       {"score", e.score},
                       {"last_scored", e.last_scored ? nlohmann::json(format_rfc3339(*e.last_scored))
                                                     : nlohmann::json(nullptr)}};
}

inline void to_json(nlohmann::json &j, const LogEntry &e) {
    j = nlohmann::json{{"seq", e.seq},
                       {"time", format_rfc3339(e.time)},
                       {"session_id", e.session_id},
                       {"action", e.action},
                       {"round", to_string(e.round)},
                       {"score", e.score}};
    if (e.item) j["item"] = *e.item;
    if (e.label) j["label"] = to_string(*e.label);
    if (e.reference_label) j["reference_label"] = to_string(*e.reference_label);
    if (e.feedback) j["feedback"] = *e.feedback;
}

inline void Game::export_log(std::ostream &out) const {
    for (const auto &e : log_) {
        out << nlohmann::json(e).dump() << '\n';
    }
}

inline nlohmann::json Game::to_json() const {
    using nlohmann::json;
    json sessions = json::array();
    for (const auto &[id, s] : sessions_) {
        json js = s;
        js["seed"] = s.seed;
        js["answered"] = s.answered;
        js["calibration_answered"] = s.calibration_answered;
        js["production_answered"] = s.production_answered;
        js["authoring_prompted"] = s.authoring_prompted;
        sessions.push_back(std::move(js));
    }
    json authored = json::array();
    for (const auto &[id, a] : authored_) {
        authored.push_back(a);
    }
    json votes = json::object();
    for (const auto &[item, box] : votes_) {
        json vs = json::array();
        for (const auto &v : box.votes) {
            vs.push_back({{"session_id", v.session_id},
                          {"player_id", v.player_id},
                          {"label", to_string(v.label)},
                          {"settled", v.settled}});
        }
        votes[item] = {{"votes", vs},
                       {"consensus", box.consensus ? json(to_string(*box.consensus)) : json(nullptr)}};
    }
    json last = json::object();
    for (const auto &[player, t] : last_scored_) {
        last[player] = format_rfc3339(t);
    }
    return json{{"sessions", sessions},       {"authored", authored},
                {"votes", votes},             {"last_scored", last},
                {"log", log_},                {"session_counter", session_counter_},
                {"authored_counter", authored_counter_}};
}

inline void Game::load_json(const nlohmann::json &j) {
    std::map<std::string, GameSession> sessions;
    for (const auto &js : j.at("sessions")) {
        GameSession s;
        s.id = js.at("id").get<std::string>();
        s.player_id = js.at("player_id").get<std::string>();
        s.round = parse_round(js.at("round").get<std::string>());
        s.items_served = js.at("items_served").get<std::vector<std::string>>();
        s.score = js.at("score").get<int>();
        s.state = parse_session_state(js.at("state").get<std::string>());
        s.tutorial_acknowledged = js.at("tutorial_acknowledged").get<std::size_t>();
        if (!js.at("outstanding").is_null()) s.outstanding = js.at("outstanding").get<std::string>();
        s.authoring_unlocked = js.at("authoring_unlocked").get<bool>();
        s.started = parse_rfc3339(js.at("started").get<std::string>());
        s.last_activity = parse_rfc3339(js.at("last_activity").get<std::string>());
        s.seed = js.at("seed").get<std::uint64_t>();
        s.answered = js.at("answered").get<std::set<std::string>>();
        s.calibration_answered = js.at("calibration_answered").get<std::size_t>();
        s.production_answered = js.at("production_answered").get<std::size_t>();
        s.authoring_prompted = js.at("authoring_prompted").get<bool>();
        auto id = s.id;
        sessions.emplace(std::move(id), std::move(s));
    }
    std::map<std::string, AuthoredSentence> authored;
    for (const auto &ja : j.at("authored")) {
        AuthoredSentence a;
        a.id = ja.at("id").get<std::string>();
        a.author_player_id = ja.at("author_player_id").get<std::string>();
        a.session_id = ja.at("session_id").get<std::string>();
        a.text = ja.at("text").get<std::string>();
        a.created = parse_rfc3339(ja.at("created").get<std::string>());
        for (const auto &r : ja.at("peer_ratings")) {
            a.peer_ratings.push_back(
                PeerRating{r.at("player_id").get<std::string>(), parse_label(r.at("label").get<std::string>())});
        }
        auto id = a.id;
        authored.emplace(std::move(id), std::move(a));
    }
    std::map<std::string, VoteBox> votes;
    for (const auto &[item, jb] : j.at("votes").items()) {
        VoteBox box;
        for (const auto &v : jb.at("votes")) {
            box.votes.push_back(Vote{v.at("session_id").get<std::string>(), v.at("player_id").get<std::string>(),
                                     parse_label(v.at("label").get<std::string>()), v.at("settled").get<bool>()});
        }
        if (!jb.at("consensus").is_null()) box.consensus = parse_label(jb.at("consensus").get<std::string>());
        votes.emplace(item, std::move(box));
    }
    std::map<std::string, TimePoint> last;
    for (const auto &[player, t] : j.at("last_scored").items()) {
        last.emplace(player, parse_rfc3339(t.get<std::string>()));
    }
    std::vector<LogEntry> entries;
    for (const auto &je : j.at("log")) {
        LogEntry e;
        e.seq = je.at("seq").get<std::size_t>();
        e.time = parse_rfc3339(je.at("time").get<std::string>());
        e.session_id = je.at("session_id").get<std::string>();
        e.action = je.at("action").get<std::string>();
        e.round = parse_round(je.at("round").get<std::string>());
        e.score = je.at("score").get<int>();
        if (je.contains("item")) e.item = je.at("item").get<std::string>();
        if (je.contains("label")) e.label = parse_label(je.at("label").get<std::string>());
        if (je.contains("reference_label")) e.reference_label = parse_label(je.at("reference_label").get<std::string>());
        if (je.contains("feedback")) e.feedback = je.at("feedback").get<Feedback>();
        entries.push_back(std::move(e));
    }
    sessions_ = std::move(sessions);
    authored_ = std::move(authored);
    votes_ = std::move(votes);
    last_scored_ = std::move(last);
    log_ = std::move(entries);
    session_counter_ = j.at("session_counter").get<std::size_t>();
    authored_counter_ = j.at("authored_counter").get<std::size_t>();
}

}  // namespace biaslab
