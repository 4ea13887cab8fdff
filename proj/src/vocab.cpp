#include "autocut/vocab.hpp"

#include <cstdio>

namespace autocut {

const char* marker_name(Marker m) {
    switch (m) {
    case Marker::clip_begin:
        return "clip_begin";
    case Marker::clip_end:
        return "clip_end";
    case Marker::bgm_begin:
        return "bgm_begin";
    case Marker::bgm_end:
        return "bgm_end";
    case Marker::product_begin:
        return "product_begin";
    case Marker::product_end:
        return "product_end";
    }
    return "?";
}

Vocabulary::Vocabulary(std::size_t video_levels, std::size_t video_codebook,
                       std::size_t audio_levels, std::size_t audio_codebook)
    : video_levels_(video_levels),
      video_codebook_(video_codebook),
      audio_levels_(audio_levels),
      audio_codebook_(audio_codebook),
      audio_base_(video_levels * video_codebook),
      marker_base_(audio_base_ + audio_levels * audio_codebook),
      total_(marker_base_ + kMarkerCount) {}

Vocabulary build_vocabulary(const QuantizerConfig& video_cfg, const QuantizerConfig& audio_cfg) {
    return Vocabulary(video_cfg.levels, video_cfg.codebook_size, audio_cfg.levels,
                      audio_cfg.codebook_size);
}

std::uint32_t Vocabulary::token_of(Modality m, std::size_t level, std::size_t code) const {
    const std::size_t levels = m == Modality::video ? video_levels_ : audio_levels_;
    const std::size_t k = m == Modality::video ? video_codebook_ : audio_codebook_;
    if (level >= levels || code >= k) {
        throw data_error("token_of out of range: level " + std::to_string(level) + ", code " +
                         std::to_string(code));
    }
    const std::size_t base = m == Modality::video ? 0 : audio_base_;
    return static_cast<std::uint32_t>(base + level * k + code);
}

std::uint32_t Vocabulary::marker_token(Marker m) const {
    return static_cast<std::uint32_t>(marker_base_ + static_cast<std::size_t>(m));
}

bool Vocabulary::is_marker(std::uint32_t token_id) const {
    return token_id >= marker_base_ && token_id < total_;
}

Marker Vocabulary::marker_of(std::uint32_t token_id) const {
    if (!is_marker(token_id)) {
        throw data_error("token " + std::to_string(token_id) + " is not a marker");
    }
    return static_cast<Marker>(token_id - marker_base_);
}

Vocabulary::CodeRef Vocabulary::parse(std::uint32_t token_id) const {
    if (token_id < audio_base_) {
        return {Modality::video, token_id / video_codebook_, token_id % video_codebook_};
    }
    if (token_id < marker_base_) {
        const std::size_t local = token_id - audio_base_;
        return {Modality::audio, local / audio_codebook_, local % audio_codebook_};
    }
    throw data_error("token " + std::to_string(token_id) + " has no (modality, level, code)");
}

std::string Vocabulary::render(std::uint32_t token_id) const {
    if (is_marker(token_id)) {
        return std::string("<") + marker_name(marker_of(token_id)) + ">";
    }
    const CodeRef ref = parse(token_id);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "<%c_%zu_%zu>", ref.modality == Modality::video ? 'v' : 'a',
                  ref.level, ref.code);
    return buf;
}

std::optional<std::uint32_t> Vocabulary::parse_surface(const std::string& literal) const {
    if (literal.size() < 3 || literal.front() != '<' || literal.back() != '>') {
        return std::nullopt;
    }
    const std::string body = literal.substr(1, literal.size() - 2);
    for (std::size_t m = 0; m < kMarkerCount; ++m) {
        if (body == marker_name(static_cast<Marker>(m))) {
            return marker_token(static_cast<Marker>(m));
        }
    }
    char kind = 0;
    std::size_t level = 0;
    std::size_t code = 0;
    char tail = 0;
    if (std::sscanf(literal.c_str(), "<%c_%zu_%zu%c", &kind, &level, &code, &tail) != 4 ||
        tail != '>') {
        return std::nullopt;
    }
    if (kind != 'v' && kind != 'a') {
        return std::nullopt;
    }
    const Modality m = kind == 'v' ? Modality::video : Modality::audio;
    const std::size_t levels = m == Modality::video ? video_levels_ : audio_levels_;
    const std::size_t k = m == Modality::video ? video_codebook_ : audio_codebook_;
    if (level >= levels || code >= k) {
        return std::nullopt;
    }
    return token_of(m, level, code);
}

std::string Vocabulary::render_group(const CodeGroup& group) const {
    std::string out;
    for (std::size_t level = 0; level < group.codes.size(); ++level) {
        out += render(token_of(group.modality, level, group.codes[level]));
    }
    return out;
}

} // namespace autocut
