#include "autocut/media_id.hpp"

#include "autocut/common.hpp"

namespace autocut {

bool is_digit_string(const std::string& s) {
    if (s.empty()) {
        return false;
    }
    for (char c : s) {
        if (c < '0' || c > '9') {
            return false;
        }
    }
    return true;
}

namespace {

void require_photo_id(const std::string& photo_id) {
    if (!is_digit_string(photo_id)) {
        throw data_error("photo_id must be a nonempty digit string, got \"" + photo_id + "\"");
    }
}

std::string zero_pad(int value, int width) {
    std::string s = std::to_string(value);
    if (static_cast<int>(s.size()) < width) {
        s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
    }
    return s;
}

int parse_digits(const std::string& id, std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        v = v * 10 + (id[i] - '0');
    }
    return v;
}

} // namespace

std::string encode_frame_id(const std::string& photo_id, int frame_index) {
    require_photo_id(photo_id);
    if (frame_index < 0 || frame_index > kMaxFrameIndex) {
        throw data_error("frame_index out of range [0, 9999]: " + std::to_string(frame_index));
    }
    return photo_id + zero_pad(frame_index, kFrameDigits);
}

std::string encode_clip_id(const std::string& photo_id, int start_frame, int duration) {
    require_photo_id(photo_id);
    if (start_frame < 0 || start_frame > kMaxStartFrame) {
        throw data_error("clip start_frame out of range [0, 9999]: " + std::to_string(start_frame));
    }
    if (duration < kMinClipDuration || duration > kMaxClipDuration) {
        throw data_error("clip duration out of range [1, 999]: " + std::to_string(duration));
    }
    return photo_id + zero_pad(start_frame, 4) + zero_pad(duration, 3);
}

std::pair<std::string, int> decode_frame_id(const std::string& id) {
    if (!is_digit_string(id)) {
        throw data_error("frame_id contains non-digit characters: \"" + id + "\"");
    }
    if (id.size() <= kFrameDigits) {
        throw data_error("frame_id too short (need photo_id + 4 digits): \"" + id + "\"");
    }
    const std::size_t split = id.size() - kFrameDigits;
    return {id.substr(0, split), parse_digits(id, split, kFrameDigits)};
}

std::tuple<std::string, int, int> decode_clip_id(const std::string& id) {
    if (!is_digit_string(id)) {
        throw data_error("clip_id contains non-digit characters: \"" + id + "\"");
    }
    if (id.size() <= kClipSuffixDigits) {
        throw data_error("clip_id too short (need photo_id + 7 digits): \"" + id + "\"");
    }
    const std::size_t split = id.size() - kClipSuffixDigits;
    const int start = parse_digits(id, split, 4);
    const int duration = parse_digits(id, split + 4, 3);
    if (duration < kMinClipDuration) {
        throw data_error("clip_id encodes zero duration: \"" + id + "\"");
    }
    return {id.substr(0, split), start, duration};
}

} // namespace autocut
