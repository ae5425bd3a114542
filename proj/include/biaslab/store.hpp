#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "biaslab/error.hpp"
#include "biaslab/time.hpp"
#include "biaslab/workbench.hpp"

namespace biaslab {

/// Directory-backed persistence for a Workbench:
///
///   snapshot.json   full state plus the journal sequence it includes
///   journal.jsonl   one accepted command per line, fsynced before ack
///   models/         checkpoints referenced by register_model
///
/// Commands are applied first and journaled only when accepted, so the
/// journal replays without errors. A torn trailing line (crash mid-append)
/// is dropped on open; any other damage refuses to open.
class Store {
  public:
    using Clock = std::function<TimePoint()>;

    /// Opens or creates the store. The game config is fixed at creation
    /// (replay depends on it); passing a different one later is a conflict,
    /// passing none adopts the stored one.
    explicit Store(std::filesystem::path dir, std::optional<GameConfig> game_config = std::nullopt,
                   std::size_t checkpoint_every = 1000)
        : dir_(std::move(dir)), checkpoint_every_(checkpoint_every) {
        std::error_code ec;
        std::filesystem::create_directories(models_dir(), ec);
        if (ec) {
            fail(ErrorKind::io, "cannot create store at '" + dir_.string() + "': " + ec.message());
        }
        bench_ = std::make_unique<Workbench>(settle_config(game_config), models_dir());
        recover();
        journal_fd_ = ::open(journal_path().c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
        if (journal_fd_ < 0) {
            fail(ErrorKind::io, "cannot open journal: " + std::string(std::strerror(errno)));
        }
    }

    Store(const Store &) = delete;
    Store &operator=(const Store &) = delete;

    ~Store() {
        if (journal_fd_ >= 0) {
            ::close(journal_fd_);
        }
    }

    [[nodiscard]] const std::filesystem::path &dir() const noexcept { return dir_; }
    [[nodiscard]] std::filesystem::path models_dir() const { return dir_ / "models"; }
    [[nodiscard]] std::filesystem::path snapshot_path() const { return dir_ / "snapshot.json"; }
    [[nodiscard]] std::filesystem::path journal_path() const { return dir_ / "journal.jsonl"; }

    void set_clock(Clock clock) { clock_ = std::move(clock); }

    /// Applies and journals one command. The command's "time" is stamped
    /// here when absent. Returns the command result once it is durable.
    nlohmann::json commit(nlohmann::json command) {
        std::unique_lock lock(mutex_);
        if (poisoned_) {
            fail(ErrorKind::io, "store is read-only after a failed journal write; restart to recover");
        }
        if (!command.is_object()) {
            fail(ErrorKind::invalid, "command must be an object");
        }
        if (!command.contains("time")) {
            command["time"] = format_rfc3339(clock_ ? clock_() : now_utc());
        }
        auto result = bench_->apply(command);
        command["seq"] = seq_ + 1;
        const auto line = command.dump() + "\n";
        if (!write_all(line) || ::fsync(journal_fd_) != 0) {
            poisoned_ = true;
            fail(ErrorKind::io, "journal write failed: " + std::string(std::strerror(errno)));
        }
        ++seq_;
        if (checkpoint_every_ > 0 && ++since_checkpoint_ >= checkpoint_every_) {
            checkpoint_locked();
        }
        return result;
    }

    /// Runs `f` against the committed state under a shared lock.
    template <class F>
    auto read(F &&f) const {
        std::shared_lock lock(mutex_);
        return std::forward<F>(f)(static_cast<const Workbench &>(*bench_));
    }

    /// Writes a snapshot atomically and empties the journal.
    void checkpoint() {
        std::unique_lock lock(mutex_);
        checkpoint_locked();
    }

    [[nodiscard]] std::uint64_t journal_seq() const {
        std::shared_lock lock(mutex_);
        return seq_;
    }

  private:
    bool write_all(const std::string &data) {
        std::size_t off = 0;
        while (off < data.size()) {
            const auto n = ::write(journal_fd_, data.data() + off, data.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            off += static_cast<std::size_t>(n);
        }
        return true;
    }

    static void fsync_path(const std::filesystem::path &p, int flags) {
        const int fd = ::open(p.c_str(), flags | O_CLOEXEC);
        if (fd >= 0) {
            ::fsync(fd);
            ::close(fd);
        }
    }

    void checkpoint_locked() {
        auto snap = bench_->to_json();
        snap["journal_seq"] = seq_;
        const auto tmp = dir_ / "snapshot.json.tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << snap.dump();
            out.flush();
            if (!out) {
                fail(ErrorKind::io, "cannot write snapshot '" + tmp.string() + "'");
            }
        }
        fsync_path(tmp, O_RDONLY);
        std::error_code ec;
        std::filesystem::rename(tmp, snapshot_path(), ec);
        if (ec) {
            fail(ErrorKind::io, "cannot install snapshot: " + ec.message());
        }
        fsync_path(dir_, O_RDONLY | O_DIRECTORY);
        // lines at or below journal_seq are skipped on replay, so a crash
        // before this truncate is harmless
        if (::ftruncate(journal_fd_, 0) != 0) {
            fail(ErrorKind::io, "cannot truncate journal: " + std::string(std::strerror(errno)));
        }
        ::fsync(journal_fd_);
        since_checkpoint_ = 0;
    }

    static std::string corrupt(const std::string &what) { return "corrupt store: " + what; }

    GameConfig settle_config(const std::optional<GameConfig> &requested) {
        const auto path = dir_ / "config.json";
        if (std::filesystem::exists(path)) {
            GameConfig stored;
            try {
                std::ifstream in(path, std::ios::binary);
                stored = nlohmann::json::parse(in).at("game").get<GameConfig>();
            } catch (const nlohmann::json::exception &e) {
                fail(ErrorKind::io, corrupt("config.json: " + std::string(e.what())));
            }
            if (requested && !(*requested == stored)) {
                fail(ErrorKind::conflict, "store at '" + dir_.string() + "' was created with a different game config");
            }
            return stored;
        }
        const auto config = requested.value_or(GameConfig{});
        const auto tmp = dir_ / "config.json.tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << nlohmann::json{{"schema_version", schema_version}, {"game", config}}.dump(2) << "\n";
            if (!out) fail(ErrorKind::io, "cannot write '" + tmp.string() + "'");
        }
        fsync_path(tmp, O_RDONLY);
        std::filesystem::rename(tmp, path);
        fsync_path(dir_, O_RDONLY | O_DIRECTORY);
        return config;
    }

    void recover() {
        if (std::filesystem::exists(snapshot_path())) {
            std::ifstream in(snapshot_path(), std::ios::binary);
            std::stringstream buf;
            buf << in.rdbuf();
            try {
                const auto snap = nlohmann::json::parse(buf.str());
                bench_->load_json(snap);
                seq_ = snap.at("journal_seq").get<std::uint64_t>();
            } catch (const nlohmann::json::exception &e) {
                fail(ErrorKind::io, corrupt("snapshot.json: " + std::string(e.what())));
            } catch (const Error &e) {
                fail(ErrorKind::io, corrupt("snapshot.json: " + std::string(e.what())));
            }
        }
        if (!std::filesystem::exists(journal_path())) {
            return;
        }
        std::ifstream in(journal_path(), std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        const auto data = buf.str();
        std::size_t pos = 0, line_no = 0, good_end = 0;
        while (pos < data.size()) {
            const auto nl = data.find('\n', pos);
            if (nl == std::string::npos) {
                break;  // torn tail: never acknowledged
            }
            ++line_no;
            const auto where = "journal.jsonl line " + std::to_string(line_no);
            nlohmann::json command;
            try {
                command = nlohmann::json::parse(data.substr(pos, nl - pos));
            } catch (const nlohmann::json::exception &e) {
                fail(ErrorKind::io, corrupt(where + ": " + e.what()));
            }
            const auto seq = command.value("seq", std::uint64_t{0});
            if (seq > seq_) {
                if (seq != seq_ + 1) {
                    fail(ErrorKind::io, corrupt(where + ": sequence gap after " + std::to_string(seq_)));
                }
                try {
                    bench_->apply(command);
                } catch (const Error &e) {
                    fail(ErrorKind::io, corrupt(where + ": replay rejected: " + e.what()));
                }
                seq_ = seq;
            }
            pos = nl + 1;
            good_end = pos;
        }
        if (good_end < data.size()) {
            std::filesystem::resize_file(journal_path(), good_end);
        }
    }

    std::filesystem::path dir_;
    std::size_t checkpoint_every_;
    std::unique_ptr<Workbench> bench_;
    mutable std::shared_mutex mutex_;
    Clock clock_;
    int journal_fd_ = -1;
    std::uint64_t seq_ = 0;
    std::size_t since_checkpoint_ = 0;
    bool poisoned_ = false;
};

}  // namespace biaslab
