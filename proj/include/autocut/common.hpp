#pragma once

#include <stdexcept>
#include <string>

namespace autocut {

// Error taxonomy mirrors the CLI exit codes: config errors exit 2,
// data errors 3, judge transport errors 4.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : error {
    using error::error;
};

struct data_error : error {
    using error::error;
};

struct judge_error : error {
    using error::error;
};

enum class Modality { video, audio };

inline const char* modality_name(Modality m) {
    return m == Modality::video ? "video" : "audio";
}

inline Modality modality_from_name(const std::string& s) {
    if (s == "video") {
        return Modality::video;
    }
    if (s == "audio") {
        return Modality::audio;
    }
    throw config_error("unknown modality: " + s);
}

} // namespace autocut
