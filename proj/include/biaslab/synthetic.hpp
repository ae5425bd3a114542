#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "biaslab/pipeline.hpp"
#include "biaslab/random.hpp"
#include "biaslab/textprep.hpp"

// Planted-trigger corpora: a sentence is biased when it contains one of a
// fixed set of trigger words. Used for controlled training experiments where
// the achievable accuracy is known by construction.
namespace biaslab::synthetic {

struct PlantSpec {
    std::size_t filler_words = 300;
    std::size_t trigger_words = 40;
    std::size_t min_length = 6;
    std::size_t max_length = 12;
    std::size_t max_triggers = 2;
    double positive_rate = 0.5;
    double label_noise = 0.0;                // probability of flipping the emitted label
    double untriggered_positive_rate = 0.0;  // positives that carry no trigger
    std::string id_prefix = "s";
};

inline std::string filler_word(std::size_t i) { return "w" + std::to_string(i); }
inline std::string trigger_word(std::size_t i) { return "trig" + std::to_string(i); }

/// Generates `n` examples. Tags: "trigger" / "no-trigger", plus "flipped"
/// when label noise fired. Texts already in `used` are re-drawn so corpora
/// generated against a shared set never overlap.
inline std::vector<TextExample> generate(const PlantSpec &spec, std::size_t n, Rng &rng,
                                         std::set<std::string> *used = nullptr) {
    std::vector<TextExample> out;
    out.reserve(n);
    while (out.size() < n) {
        const bool positive = rng.bernoulli(spec.positive_rate);
        const bool triggered = positive && !rng.bernoulli(spec.untriggered_positive_rate);
        const std::size_t length = spec.min_length + rng.uniform_index(spec.max_length - spec.min_length + 1);
        std::vector<std::string> words;
        words.reserve(length);
        for (std::size_t i = 0; i < length; ++i) {
            words.push_back(filler_word(rng.uniform_index(spec.filler_words)));
        }
        if (triggered) {
            const std::size_t count = 1 + rng.uniform_index(spec.max_triggers);
            for (std::size_t t = 0; t < count; ++t) {
                words[rng.uniform_index(length)] = trigger_word(rng.uniform_index(spec.trigger_words));
            }
        }
        std::string text;
        for (const auto &w : words) {
            text += (text.empty() ? "" : " ") + w;
        }
        text += ".";
        if (used != nullptr && !used->insert(normalize_for_matching(text)).second) {
            continue;
        }
        const bool flipped = rng.bernoulli(spec.label_noise);
        TextExample ex;
        ex.id = spec.id_prefix + std::to_string(out.size());
        ex.text = std::move(text);
        ex.label = (positive != flipped) ? Label::biased : Label::neutral;
        ex.tags.push_back(triggered ? "trigger" : "no-trigger");
        if (flipped) {
            ex.tags.push_back("flipped");
        }
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace biaslab::synthetic
