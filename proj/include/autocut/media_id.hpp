#pragma once

#include <string>
#include <tuple>
#include <utility>

namespace autocut {

// Digit-packed asset identifiers. IDs stay decimal strings end to end:
// photo_id length varies and may carry leading zeros, so decoding splits
// from the right.
//   frame_id = photo_id . 4-digit frame index
//   clip_id  = photo_id . 4-digit start frame . 3-digit duration (1 fps)
//   audio_id = opaque key for a BGM track
enum class MediaKind { frame, clip, audio };

inline constexpr int kFrameDigits = 4;
inline constexpr int kClipSuffixDigits = 7;
inline constexpr int kMaxFrameIndex = 9999;
inline constexpr int kMaxStartFrame = 9999;
inline constexpr int kMinClipDuration = 1;
inline constexpr int kMaxClipDuration = 999;

std::string encode_frame_id(const std::string& photo_id, int frame_index);
std::string encode_clip_id(const std::string& photo_id, int start_frame, int duration);

std::pair<std::string, int> decode_frame_id(const std::string& id);
std::tuple<std::string, int, int> decode_clip_id(const std::string& id);

bool is_digit_string(const std::string& s);

} // namespace autocut
