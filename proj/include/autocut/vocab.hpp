#pragma once

#include "autocut/common.hpp"
#include "autocut/quantizer.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace autocut {

enum class Marker : std::uint32_t {
    clip_begin = 0,
    clip_end,
    bgm_begin,
    bgm_end,
    product_begin,
    product_end,
};

inline constexpr std::size_t kMarkerCount = 6;

// Unified multimodal token layout: the video block (level-major), then
// the audio block, then the six markers. Ids index the multimodal tail
// appended to a text vocabulary; text tokens are outside this range.
class Vocabulary {
public:
    Vocabulary(std::size_t video_levels, std::size_t video_codebook,
               std::size_t audio_levels, std::size_t audio_codebook);

    std::size_t size() const { return total_; }
    std::size_t video_tokens() const { return video_levels_ * video_codebook_; }
    std::size_t audio_tokens() const { return audio_levels_ * audio_codebook_; }

    std::uint32_t token_of(Modality m, std::size_t level, std::size_t code) const;
    std::uint32_t marker_token(Marker m) const;

    struct CodeRef {
        Modality modality;
        std::size_t level;
        std::size_t code;
    };
    // Inverse of token_of; throws on marker or out-of-range ids.
    CodeRef parse(std::uint32_t token_id) const;
    bool is_marker(std::uint32_t token_id) const;
    Marker marker_of(std::uint32_t token_id) const;

    // Surface forms: <v_l_c>, <a_l_c>, <clip_begin>, ... One token each.
    std::string render(std::uint32_t token_id) const;
    std::optional<std::uint32_t> parse_surface(const std::string& literal) const;

    std::string render_group(const CodeGroup& group) const;

private:
    std::size_t video_levels_;
    std::size_t video_codebook_;
    std::size_t audio_levels_;
    std::size_t audio_codebook_;
    std::size_t audio_base_;
    std::size_t marker_base_;
    std::size_t total_;
};

Vocabulary build_vocabulary(const QuantizerConfig& video_cfg, const QuantizerConfig& audio_cfg);

const char* marker_name(Marker m);

} // namespace autocut
