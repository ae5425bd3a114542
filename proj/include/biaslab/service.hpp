#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "biaslab/agreement.hpp"
#include "biaslab/error.hpp"
#include "biaslab/store.hpp"

namespace biaslab {

struct ApiError {
    int status = 500;
    std::string code;
    std::string message;
};

inline ApiError api_error(const Error &e) {
    switch (e.kind()) {
        case ErrorKind::invalid:
            return {422, "invalid", e.what()};
        case ErrorKind::not_found:
            return {404, "not_found", e.what()};
        case ErrorKind::conflict:
            return {409, "conflict", e.what()};
        case ErrorKind::unauthorized:
            return {401, "unauthorized", e.what()};
        case ErrorKind::undefined:
            return {422, "undefined", e.what()};
        case ErrorKind::numeric:
            return {500, "numeric", e.what()};
        case ErrorKind::io:
            break;
    }
    return {500, "io", e.what()};
}

inline nlohmann::json to_json(const ApiError &e) {
    return nlohmann::json{{"status", e.status}, {"code", e.code}, {"message", e.message}};
}

/// Scores a batch with a registered model, in request order.
inline nlohmann::json classify_batch(const Workbench &bench, std::string_view model_id,
                                     const std::vector<std::string> &texts) {
    const auto &bundle = bench.model(model_id);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (texts[i].empty()) {
            fail(ErrorKind::invalid, "text at index " + std::to_string(i) + " is empty");
        }
    }
    nlohmann::json scores = nlohmann::json::array();
    nlohmann::json labels = nlohmann::json::array();
    for (const auto &t : texts) {
        const double s = bundle.score(t);
        scores.push_back(s);
        labels.push_back(to_string(s >= 0.5 ? Label::biased : Label::neutral));
    }
    return nlohmann::json{{"model_id", bundle.id()}, {"scores", scores}, {"labels", labels}};
}

inline nlohmann::json agreement_report(const Workbench &bench, std::string_view stat) {
    const auto statistic = parse_statistic(stat);
    return nlohmann::json(compute_agreement(statistic, ReliabilityMatrix::from_annotations(bench.annotations())));
}

/// REST front end over a Store. Reads take the shared lock; every mutation
/// is one Store::commit. Mutations require `Authorization: Bearer <token>`.
class Service {
  public:
    Service(Store &store, std::string token) : store_(store), token_(std::move(token)) {
        if (token_.empty()) {
            fail(ErrorKind::invalid, "service needs a non-empty auth token");
        }
        routes();
    }

    Service(const Service &) = delete;
    Service &operator=(const Service &) = delete;

    /// Binds without serving; returns the bound port (useful with port 0).
    int bind(const std::string &host, int port) {
        if (port == 0) {
            const int p = server_.bind_to_any_port(host);
            if (p < 0) fail(ErrorKind::io, "cannot bind " + host);
            return p;
        }
        if (!server_.bind_to_port(host, port)) {
            fail(ErrorKind::io, "cannot bind " + host + ":" + std::to_string(port));
        }
        return port;
    }

    /// Blocks until stop().
    void serve() { server_.listen_after_bind(); }
    void stop() { server_.stop(); }
    void wait_until_ready() const { server_.wait_until_ready(); }

  private:
    using Req = httplib::Request;
    using Res = httplib::Response;
    using Handler = std::function<nlohmann::json(const Req &, Res &)>;

    static void send(Res &res, int status, const nlohmann::json &body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void send_error(Res &res, const ApiError &e) { send(res, e.status, to_json(e)); }

    void authorize(const Req &req) const {
        const auto header = req.get_header_value("Authorization");
        const std::string expected = "Bearer " + token_;
        // compare every byte so timing does not leak the prefix length
        unsigned diff = header.size() == expected.size() ? 0u : 1u;
        for (std::size_t i = 0; i < header.size() && i < expected.size(); ++i) {
            diff |= static_cast<unsigned>(header[i] ^ expected[i]);
        }
        if (diff != 0) {
            fail(ErrorKind::unauthorized, "missing or wrong bearer token");
        }
    }

    static nlohmann::json body_of(const Req &req) {
        try {
            auto j = nlohmann::json::parse(req.body.empty() ? std::string("{}") : req.body);
            if (j.is_object()) return j;
        } catch (const nlohmann::json::exception &e) {
            throw BadRequest{std::string("malformed JSON body: ") + e.what()};
        }
        throw BadRequest{"body must be a JSON object"};
    }

    struct BadRequest {
        std::string message;
    };

    // Wraps a handler with auth and error mapping.
    httplib::Server::Handler wrap(Handler h, bool mutation, int ok_status = 200) {
        return [this, h = std::move(h), mutation, ok_status](const Req &req, Res &res) {
            try {
                if (mutation) authorize(req);
                send(res, ok_status, h(req, res));
            } catch (const BadRequest &e) {
                send_error(res, {400, "bad_request", e.message});
            } catch (const Error &e) {
                send_error(res, api_error(e));
            } catch (const std::exception &e) {
                send_error(res, {500, "internal", e.what()});
            }
        };
    }

    nlohmann::json commit(nlohmann::json command) { return store_.commit(std::move(command)); }

    static std::string session_id(const Req &req) { return req.path_params.at("id"); }

    void routes() {
        using nlohmann::json;
        server_.Get("/health", wrap([this](const Req &, Res &) {
                        return json{{"status", "ok"},
                                    {"schema_version", schema_version},
                                    {"journal_seq", store_.journal_seq()}};
                    },
                    false));

        server_.Get("/outlets", wrap([this](const Req &, Res &) {
                        return store_.read([](const Workbench &w) {
                            json out = json::array();
                            for (const auto &[id, o] : w.corpus().outlets()) out.push_back(o);
                            return out;
                        });
                    },
                    false));
        server_.Post("/outlets", wrap([this](const Req &req, Res &) {
                         auto body = body_of(req);
                         return commit(json{{"op", "add_outlets"}, {"outlets", body.value("outlets", json::array())}});
                     },
                     true, 201));

        server_.Post("/sentences", wrap([this](const Req &req, Res &) {
                         auto body = body_of(req);
                         body["op"] = "add_sentences";
                         body.erase("time");
                         return commit(std::move(body));
                     },
                     true, 201));
        server_.Get("/sentences", wrap([this](const Req &req, Res &) {
                        std::optional<CorpusKind> kind;
                        if (req.has_param("kind")) kind = parse_corpus_kind(req.get_param_value("kind"));
                        return store_.read([&](const Workbench &w) {
                            json out = json::array();
                            for (const auto *s : w.corpus().sentences(kind)) out.push_back(*s);
                            return out;
                        });
                    },
                    false));

        server_.Post("/profiles", wrap([this](const Req &req, Res &) {
                         auto body = body_of(req);
                         return commit(json{{"op", "add_profiles"}, {"profiles", body.value("profiles", json::array())}});
                     },
                     true, 201));
        server_.Get("/profiles", wrap([this](const Req &, Res &) {
                        return store_.read([](const Workbench &w) {
                            json out = json::array();
                            for (const auto &[id, p] : w.annotations().profiles()) out.push_back(p);
                            return out;
                        });
                    },
                    false));

        // accepts one record or {"records": [...]}
        server_.Post("/annotations", wrap([this](const Req &req, Res &) {
                         auto body = body_of(req);
                         json records = body.contains("records") ? body.at("records") : json::array({body});
                         return commit(json{{"op", "submit_annotations"}, {"records", records}});
                     },
                     true, 201));
        server_.Get("/annotations", wrap([this](const Req &req, Res &) {
                        const auto sentence = req.get_param_value("sentence_id");
                        return store_.read([&](const Workbench &w) {
                            json out = json::array();
                            const auto records =
                                sentence.empty() ? w.annotations().records() : w.annotations().records_for(sentence);
                            for (const auto *r : records) out.push_back(*r);
                            return out;
                        });
                    },
                    false));

        server_.Post("/classify", wrap([this](const Req &req, Res &) {
                         const auto body = body_of(req);
                         std::string model_id;
                         std::vector<std::string> texts;
                         try {
                             model_id = body.at("model_id").get<std::string>();
                             texts = body.value("texts", std::vector<std::string>{});
                         } catch (const nlohmann::json::exception &e) {
                             fail(ErrorKind::invalid, std::string("classify request: ") + e.what());
                         }
                         return store_.read([&](const Workbench &w) { return classify_batch(w, model_id, texts); });
                     },
                     false));
        server_.Get("/models", wrap([this](const Req &, Res &) {
                        return store_.read([](const Workbench &w) {
                            json out = json::array();
                            for (const auto &[id, m] : w.models()) out.push_back(id);
                            return out;
                        });
                    },
                    false));

        server_.Post("/game/sessions", wrap([this](const Req &req, Res &) {
                         const auto body = body_of(req);
                         return commit(json{{"op", "start_session"}, {"player_id", body.value("player_id", "")}});
                     },
                     true, 201));
        server_.Get("/game/sessions/:id", wrap([this](const Req &req, Res &) {
                        return store_.read([&](const Workbench &w) { return json(w.game().session(session_id(req))); });
                    },
                    false));
        // serving records the serve, so it is a mutation
        server_.Get("/game/sessions/:id/next", wrap([this](const Req &req, Res &) {
                        return commit(json{{"op", "serve_next"}, {"session_id", session_id(req)}});
                    },
                    true));
        server_.Post("/game/sessions/:id/tutorial", wrap([this](const Req &req, Res &) {
                         const auto body = body_of(req);
                         return commit(json{{"op", "acknowledge_tutorial"},
                                            {"session_id", session_id(req)},
                                            {"step", body.value("step", json())}});
                     },
                     true));
        server_.Post("/game/sessions/:id/answer", wrap([this](const Req &req, Res &) {
                         auto body = body_of(req);
                         json cmd{{"op", "submit_answer"}, {"session_id", session_id(req)}};
                         for (const char *k : {"sentence_id", "label", "biased_words"}) {
                             if (body.contains(k)) cmd[k] = body.at(k);
                         }
                         return commit(std::move(cmd));
                     },
                     true));
        server_.Post("/game/sessions/:id/authored", wrap([this](const Req &req, Res &) {
                         const auto body = body_of(req);
                         return commit(json{{"op", "submit_authored"},
                                            {"session_id", session_id(req)},
                                            {"text", body.value("text", json())}});
                     },
                     true, 201));

        server_.Get("/leaderboard", wrap([this](const Req &req, Res &) {
                        std::size_t top = 10;
                        if (req.has_param("top")) {
                            try {
                                top = std::stoul(req.get_param_value("top"));
                            } catch (const std::exception &) {
                                fail(ErrorKind::invalid, "top must be a non-negative integer");
                            }
                        }
                        return store_.read([&](const Workbench &w) { return json(w.game().leaderboard(top)); });
                    },
                    false));
        server_.Get("/agreement", wrap([this](const Req &req, Res &) {
                        const auto stat = req.has_param("stat") ? req.get_param_value("stat") : std::string("alpha");
                        return store_.read([&](const Workbench &w) { return agreement_report(w, stat); });
                    },
                    false));

        server_.set_error_handler([](const Req &req, Res &res) {
            if (res.status == 404 && res.body.empty()) {
                send_error(res, {404, "not_found", "no route for " + req.method + " " + req.path});
            }
        });
    }

    Store &store_;
    std::string token_;
    httplib::Server server_;
};

}  // namespace biaslab
