#include "autocut/tokenspace.hpp"

#include "autocut/media_id.hpp"
#include "autocut/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <numeric>

namespace autocut {

using nlohmann::json;

FrameLookup FrameLookup::build(const EmbeddingMatrix& video_rows) {
    FrameLookup lookup;
    for (std::size_t i = 0; i < video_rows.rows; ++i) {
        auto [photo, t] = decode_frame_id(video_rows.row_keys[i]);
        lookup.by_photo[photo].emplace_back(t, i);
    }
    for (auto& [photo, frames] : lookup.by_photo) {
        std::sort(frames.begin(), frames.end());
    }
    return lookup;
}

namespace {

// Serialized text fields share one line with token literals, so they may
// not contain '<' or newlines.
void require_serializable_text(const std::string& text, const std::string& what) {
    if (text.find('<') != std::string::npos || text.find('\n') != std::string::npos) {
        throw data_error(what + " contains '<' or a newline and cannot be serialized: \"" +
                         text + "\"");
    }
}

CodeGroup encode_row(const QuantizerModel& quantizer, const EmbeddingMatrix& rows,
                     std::size_t row) {
    return encode(quantizer, std::span<const float>(rows.row(row), rows.dim));
}

} // namespace

std::string render_product(const ProductInfo& product) {
    return "category: " + product.category + "; brand: " + product.brand +
           "; selling_points: " + product.selling_points;
}

std::vector<float> pooled_bgm_embedding(const std::string& bgm_id,
                                        const EmbeddingMatrix& audio_rows) {
    std::vector<double> acc(audio_rows.dim, 0.0);
    std::size_t count = 0;
    const std::string prefix = bgm_id + "_";
    for (std::size_t i = 0; i < audio_rows.rows; ++i) {
        const std::string& key = audio_rows.row_keys[i];
        if (key != bgm_id && key.rfind(prefix, 0) != 0) {
            continue;
        }
        const float* row = audio_rows.row(i);
        for (std::size_t d = 0; d < audio_rows.dim; ++d) {
            acc[d] += row[d];
        }
        ++count;
    }
    if (count == 0) {
        throw data_error("no audio embedding rows for bgm track \"" + bgm_id + "\"");
    }
    std::vector<float> mean(audio_rows.dim);
    for (std::size_t d = 0; d < audio_rows.dim; ++d) {
        mean[d] = static_cast<float>(acc[d] / static_cast<double>(count));
    }
    return mean;
}

CodeGroup pool_bgm_codes(const std::string& bgm_id, const QuantizerModel& audio_quantizer,
                         const EmbeddingMatrix& audio_rows) {
    const std::vector<float> pooled = pooled_bgm_embedding(bgm_id, audio_rows);
    return encode(audio_quantizer, pooled);
}

std::optional<AlignmentSample> serialize_alignment_sample(
    const AdRecord& ad, const Vocabulary& vocab, const QuantizerModel& video_quantizer,
    const QuantizerModel& audio_quantizer, const FrameLookup& frames,
    const EmbeddingMatrix& audio_rows, std::string* skip_reason) {
    if (!ad.bgm_id) {
        if (skip_reason != nullptr) {
            *skip_reason = "ad " + ad.photo_id + " has no bgm track";
        }
        return std::nullopt;
    }
    const auto it = frames.by_photo.find(ad.photo_id);
    if (it == frames.by_photo.end()) {
        if (skip_reason != nullptr) {
            *skip_reason = "ad " + ad.photo_id + " has no frame embeddings";
        }
        return std::nullopt;
    }
    const auto& photo_frames = it->second;

    const std::string product_text = render_product(ad.product);
    require_serializable_text(product_text, "product block");

    std::string out;
    out += vocab.render(vocab.marker_token(Marker::product_begin));
    out += product_text;
    out += vocab.render(vocab.marker_token(Marker::product_end));

    for (const auto& clip : ad.clips) {
        require_serializable_text(clip.script_line, "script line");
        std::string tokens;
        std::size_t in_span = 0;
        for (const auto& [t, row] : photo_frames) {
            if (t < clip.start_frame || t >= clip.start_frame + clip.duration) {
                continue;
            }
            tokens +=
                vocab.render_group(encode(video_quantizer,
                                          std::span<const float>(nullptr, 0).empty()
                                              ? std::span<const float>()
                                              : std::span<const float>()));
            ++in_span;
        }
        if (in_span == 0) {
            if (skip_reason != nullptr) {
                *skip_reason = "clip " + clip.clip_id + " has no in-span frames";
            }
            return std::nullopt;
        }
        out += vocab.render(vocab.marker_token(Marker::clip_begin));
        out += clip.script_line;
        out += tokens;
        out += vocab.render(vocab.marker_token(Marker::clip_end));
    }

    out += vocab.render(vocab.marker_token(Marker::bgm_begin));
    out += vocab.render_group(pool_bgm_codes(*ad.bgm_id, audio_quantizer, audio_rows));
    out += vocab.render(vocab.marker_token(Marker::bgm_end));

    return AlignmentSample{ad.photo_id, out};
}

namespace {

// Pulls the next token literal starting at pos, or npos when the rest is
// plain text.
struct TokenScanner {
    const std::string& text;
    const Vocabulary& vocab;
    std::size_t pos = 0;

    // Finds the next '<...>' literal that parses as a token; returns the
    // text before it. Sets token to nullopt at end of input.
    std::string next(std::optional<std::uint32_t>& token) {
        std::string plain;
        while (pos < text.size()) {
            const std::size_t open = text.find('<', pos);
            if (open == std::string::npos) {
                plain += text.substr(pos);
                pos = text.size();
                break;
            }
            plain += text.substr(pos, open - pos);
            const std::size_t close = text.find('>', open);
            if (close == std::string::npos) {
                throw data_error("unterminated token literal in sample");
            }
            const std::string literal = text.substr(open, close - open + 1);
            const auto id = vocab.parse_surface(literal);
            if (!id) {
                throw data_error("unknown token literal: " + literal);
            }
            pos = close + 1;
            token = id;
            return plain;
        }
        token = std::nullopt;
        return plain;
    }
};

} // namespace

AlignmentStructure parse_alignment_sample(const std::string& line, const Vocabulary& vocab) {
    AlignmentStructure structure;
    TokenScanner scanner{line, vocab};

    std::optional<std::uint32_t> token;
    std::string text = scanner.next(token);
    if (!text.empty() || !token || vocab.marker_of(*token) != Marker::product_begin) {
        throw data_error("alignment sample must start with the product block");
    }
    text = scanner.next(token);
    if (!token || vocab.marker_of(*token) != Marker::product_end) {
        throw data_error("unterminated product block");
    }
    structure.product_text = text;

    // Clip blocks until the bgm block opens.
    for (;;) {
        text = scanner.next(token);
        if (!text.empty()) {
            throw data_error("unexpected text between blocks: \"" + text + "\"");
        }
        if (!token) {
            throw data_error("alignment sample missing bgm block");
        }
        if (!vocab.is_marker(*token)) {
            throw data_error("unexpected code token between blocks");
        }
        const Marker marker = vocab.marker_of(*token);
        if (marker == Marker::bgm_begin) {
            break;
        }
        if (marker != Marker::clip_begin) {
            throw data_error("unexpected marker between blocks");
        }

        AlignmentClip clip;
        std::vector<std::uint32_t> codes;
        bool saw_text = false;
        for (;;) {
            text = scanner.next(token);
            if (!saw_text) {
                clip.script_line = text;
                saw_text = true;
            } else if (!text.empty()) {
                throw data_error("text after video tokens inside a clip block");
            }
            if (!token) {
                throw data_error("unterminated clip block");
            }
            if (vocab.is_marker(*token)) {
                if (vocab.marker_of(*token) != Marker::clip_end) {
                    throw data_error("unexpected marker inside clip block");
                }
                break;
            }
            codes.push_back(*token);
        }
        // Video tokens arrive in whole frame groups with levels cycling
        // 0..L-1.
        std::size_t level_cursor = 0;
        CodeGroup frame{Modality::video, {}};
        for (const std::uint32_t id : codes) {
            const auto ref = vocab.parse(id);
            if (ref.modality != Modality::video) {
                throw data_error("audio token inside a clip block");
            }
            if (ref.level != level_cursor) {
                throw data_error("video token level out of order in clip block");
            }
            frame.codes.push_back(static_cast<std::uint16_t>(ref.code));
            level_cursor = (level_cursor + 1) % (vocab.video_tokens() == 0 ? 1 : 0);
            // placeholder, reset below
        }
        structure.clips.push_back(std::move(clip));
    }

    // BGM block: exactly the audio levels, in order.
    std::vector<std::uint32_t> codes;
    for (;;) {
        text = scanner.next(token);
        if (!text.empty()) {
            throw data_error("text inside the bgm block");
        }
        if (!token) {
            throw data_error("unterminated bgm block");
        }
        if (vocab.is_marker(*token)) {
            if (vocab.marker_of(*token) != Marker::bgm_end) {
                throw data_error("unexpected marker inside bgm block");
            }
            break;
        }
        codes.push_back(*token);
    }
    structure.bgm.modality = Modality::audio;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const auto ref = vocab.parse(codes[i]);
        if (ref.modality != Modality::audio || ref.level != i) {
            throw data_error("bgm block tokens must cover audio levels in order");
        }
        structure.bgm.codes.push_back(static_cast<std::uint16_t>(ref.code));
    }

    std::string tail = scanner.next(token);
    if (!tail.empty() || token) {
        throw data_error("trailing content after the bgm block");
    }
    return structure;
}

const char* sft_task_name(SftTask task) {
    switch (task) {
    case SftTask::select:
        return "select";
    case SftTask::sort:
        return "sort";
    case SftTask::script:
        return "script";
    case SftTask::bgm:
        return "bgm";
    }
    return "?";
}

SftTask sft_task_from_name(const std::string& name) {
    if (name == "select") {
        return SftTask::select;
    }
    if (name == "sort") {
        return SftTask::sort;
    }
    if (name == "script") {
        return SftTask::script;
    }
    if (name == "bgm") {
        return SftTask::bgm;
    }
    throw config_error("unknown sft task: " + name);
}

namespace {

const char* kSelectSystem =
    "You are an advertisement video editor. Given product information, the full script, and a "
    "pool of candidate clips, reply with the sorted zero-based indices of the clips that belong "
    "in the final advertisement, formatted as [i, j, ...].";
const char* kSortSystem =
    "You are an advertisement video editor. Given product information, the reference script, "
    "and a shuffled list of clips, reply with the zero-based candidate indices in the intended "
    "playback order, formatted as [i, j, ...].";
const char* kScriptSystem =
    "You are an advertisement script writer. Given product information and the ordered clips, "
    "write the advertisement script with exactly one line per clip.";
const char* kBgmSystem =
    "You are an advertisement music supervisor. Given product information, the ordered clips, "
    "and the script, reply with the audio tokens describing the target background music.";

std::string render_clip_entry(const ClipRecord& clip, const Vocabulary& vocab,
                              const QuantizerModel& video_quantizer,
                              const EmbeddingMatrix& video_rows) {
    if (clip.frame_keys.empty()) {
        throw data_error("clip \"" + clip.clip_id + "\" has no frames to render");
    }
    const auto row = video_rows.find(clip.frame_keys.front());
    if (row < 0) {
        throw data_error("clip \"" + clip.clip_id + "\" first frame key \"" +
                         clip.frame_keys.front() + "\" has no embedding row");
    }
    require_serializable_text(clip.script_line, "script line");
    return clip.script_line + " " +
           vocab.render_group(
               encode_row(video_quantizer, video_rows, static_cast<std::size_t>(row)));
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i > 0) {
            out += "\n";
        }
        out += lines[i];
    }
    return out;
}

std::string format_index_list(const std::vector<int>& indices) {
    std::string out = "[";
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += std::to_string(indices[i]);
    }
    out += "]";
    return out;
}

} // namespace

SftSample build_selection_sample(const AdRecord& ad, const std::vector<CandidateClip>& negatives,
                                 std::uint64_t seed, const Vocabulary& vocab,
                                 const QuantizerModel& video_quantizer,
                                 const EmbeddingMatrix& video_rows) {
    const std::size_t need = ad.clips.size();
    if (need == 0) {
        throw data_error("selection sample needs at least one clip in ad " + ad.photo_id);
    }

    Rng rng(seed);

    // Same-category negatives first, any foreign ad as fallback.
    std::vector<const CandidateClip*> same;
    std::vector<const CandidateClip*> other;
    for (const auto& cand : negatives) {
        if (cand.photo_id == ad.photo_id) {
            continue; // never sample negatives from the ad itself
        }
        (cand.category == ad.product.category ? same : other).push_back(&cand);
    }
    rng.shuffle(same);
    rng.shuffle(other);
    std::vector<const CandidateClip*> picked;
    for (const auto* c : same) {
        if (picked.size() == need) {
            break;
        }
        picked.push_back(c);
    }
    for (const auto* c : other) {
        if (picked.size() == need) {
            break;
        }
        picked.push_back(c);
    }
    if (picked.size() < need) {
        throw data_error("selection sample for ad " + ad.photo_id + " needs " +
                         std::to_string(need) + " negatives, pool provides only " +
                         std::to_string(picked.size()));
    }

    // Candidate list: positives then negatives, shuffled by the seed.
    struct Entry {
        const ClipRecord* clip;
        bool positive;
    };
    std::vector<Entry> entries;
    entries.reserve(2 * need);
    for (const auto& clip : ad.clips) {
        entries.push_back({&clip, true});
    }
    for (const auto* cand : picked) {
        entries.push_back({&cand->clip, false});
    }
    rng.shuffle(entries);

    std::vector<int> positive_indices;
    std::string listing;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        listing += std::to_string(i) + ": " +
                   render_clip_entry(*entries[i].clip, vocab, video_quantizer, video_rows) + "\n";
        if (entries[i].positive) {
            positive_indices.push_back(static_cast<int>(i));
        }
    }
    std::sort(positive_indices.begin(), positive_indices.end());

    SftSample sample;
    sample.task = SftTask::select;
    sample.system = kSelectSystem;
    sample.human = "Product:\n" + render_product(ad.product) + "\nScript:\n" +
                   join_lines(ad.script_lines) + "\nCandidates:\n" + listing;
    sample.assistant = format_index_list(positive_indices);
    sample.photo_id = ad.photo_id;
    sample.seed = seed;
    return sample;
}

SftSample build_sorting_sample(const AdRecord& ad, std::uint64_t seed, const Vocabulary& vocab,
                               const QuantizerModel& video_quantizer,
                               const EmbeddingMatrix& video_rows) {
    if (ad.clips.size() < 2) {
        throw data_error("sorting sample needs >= 2 clips in ad " + ad.photo_id);
    }
    Rng rng(seed);
    std::vector<std::size_t> shuffled(ad.clips.size());
    std::iota(shuffled.begin(), shuffled.end(), std::size_t{0});
    rng.shuffle(shuffled); // shuffled[i] = original position shown at slot i

    std::string listing;
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
        listing +=
            std::to_string(i) + ": " +
            render_clip_entry(ad.clips[shuffled[i]], vocab, video_quantizer, video_rows) + "\n";
    }

    // assistant[k] = slot holding the k-th original clip; applying it to
    // the shuffled list restores source order.
    std::vector<int> assistant(shuffled.size());
    for (std::size_t slot = 0; slot < shuffled.size(); ++slot) {
        assistant[shuffled[slot]] = static_cast<int>(slot);
    }

    SftSample sample;
    sample.task = SftTask::sort;
    sample.system = kSortSystem;
    sample.human = "Product:\n" + render_product(ad.product) + "\nScript:\n" +
                   join_lines(ad.script_lines) + "\nCandidates:\n" + listing;
    sample.assistant = format_index_list(assistant);
    sample.photo_id = ad.photo_id;
    sample.seed = seed;
    return sample;
}

SftSample build_script_sample(const AdRecord& ad, const Vocabulary& vocab,
                              const QuantizerModel& video_quantizer,
                              const EmbeddingMatrix& video_rows) {
    if (ad.script_lines.size() != ad.clips.size()) {
        throw data_error("script sample needs script_lines count == clips count in ad " +
                         ad.photo_id + " (" + std::to_string(ad.script_lines.size()) + " vs " +
                         std::to_string(ad.clips.size()) + ")");
    }
    std::string listing;
    for (std::size_t i = 0; i < ad.clips.size(); ++i) {
        const ClipRecord& clip = ad.clips[i];
        if (clip.frame_keys.empty()) {
            throw data_error("clip \"" + clip.clip_id + "\" has no frames to render");
        }
        const auto row = video_rows.find(clip.frame_keys.front());
        if (row < 0) {
            throw data_error("clip \"" + clip.clip_id + "\" first frame has no embedding row");
        }
        listing += std::to_string(i) + ": " +
                   vocab.render_group(encode_row(video_quantizer, video_rows,
                                                 static_cast<std::size_t>(row))) +
                   "\n";
    }
    SftSample sample;
    sample.task = SftTask::script;
    sample.system = kScriptSystem;
    sample.human =
        "Product:\n" + render_product(ad.product) + "\nCandidates:\n" + listing;
    sample.assistant = join_lines(ad.script_lines);
    sample.photo_id = ad.photo_id;
    sample.seed = 0;
    return sample;
}

SftSample build_bgm_sample(const AdRecord& ad, const Vocabulary& vocab,
                           const QuantizerModel& video_quantizer,
                           const QuantizerModel& audio_quantizer,
                           const EmbeddingMatrix& video_rows, const EmbeddingMatrix& audio_rows) {
    if (!ad.bgm_id) {
        throw data_error("bgm sample needs a bgm track on ad " + ad.photo_id);
    }
    std::string listing;
    for (std::size_t i = 0; i < ad.clips.size(); ++i) {
        listing += std::to_string(i) + ": " +
                   render_clip_entry(ad.clips[i], vocab, video_quantizer, video_rows) + "\n";
    }
    SftSample sample;
    sample.task = SftTask::bgm;
    sample.system = kBgmSystem;
    sample.human = "Product:\n" + render_product(ad.product) + "\nCandidates:\n" + listing +
                   "Script:\n" + join_lines(ad.script_lines);
    sample.assistant =
        vocab.render_group(pool_bgm_codes(*ad.bgm_id, audio_quantizer, audio_rows));
    sample.photo_id = ad.photo_id;
    sample.seed = 0;
    return sample;
}

std::vector<int> parse_index_list(const std::string& s) {
    if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
        throw data_error("index list must look like [i, j, ...]: \"" + s + "\"");
    }
    std::vector<int> out;
    std::size_t pos = 1;
    const std::size_t end = s.size() - 1;
    while (pos < end) {
        if (!out.empty()) {
            if (s.compare(pos, 2, ", ") != 0) {
                throw data_error("malformed index list separator in \"" + s + "\"");
            }
            pos += 2;
        }
        std::size_t digits = 0;
        int value = 0;
        while (pos < end && s[pos] >= '0' && s[pos] <= '9') {
            value = value * 10 + (s[pos] - '0');
            ++pos;
            ++digits;
        }
        if (digits == 0) {
            throw data_error("malformed index in list \"" + s + "\"");
        }
        out.push_back(value);
    }
    return out;
}

std::size_t count_candidate_lines(const std::string& human) {
    const std::size_t header = human.find("Candidates:\n");
    if (header == std::string::npos) {
        return 0;
    }
    std::size_t count = 0;
    std::size_t pos = header + 12;
    while (pos < human.size()) {
        std::size_t eol = human.find('\n', pos);
        if (eol == std::string::npos) {
            eol = human.size();
        }
        const std::string line = human.substr(pos, eol - pos);
        const std::string expect = std::to_string(count) + ": ";
        if (line.rfind(expect, 0) != 0) {
            break;
        }
        ++count;
        pos = eol + 1;
    }
    return count;
}

void validate_sft_sample(const SftSample& sample, const Vocabulary& vocab) {
    if (sample.system.empty() || sample.human.empty() || sample.assistant.empty()) {
        throw data_error("sft sample has an empty turn");
    }
    const std::size_t candidates = count_candidate_lines(sample.human);
    switch (sample.task) {
    case SftTask::select: {
        const std::vector<int> indices = parse_index_list(sample.assistant);
        if (indices.empty()) {
            throw data_error("selection assistant lists no clips");
        }
        for (std::size_t i = 0; i < indices.size(); ++i) {
            if (indices[i] < 0 || static_cast<std::size_t>(indices[i]) >= candidates) {
                throw data_error("selection index out of candidate range");
            }
            if (i > 0 && indices[i] <= indices[i - 1]) {
                throw data_error("selection indices must be strictly ascending");
            }
        }
        break;
    }
    case SftTask::sort: {
        const std::vector<int> perm = parse_index_list(sample.assistant);
        if (perm.size() != candidates) {
            throw data_error("sorting assistant must cover every candidate exactly once");
        }
        std::vector<bool> seen(perm.size(), false);
        for (int v : perm) {
            if (v < 0 || static_cast<std::size_t>(v) >= perm.size() || seen[v]) {
                throw data_error("sorting assistant is not a permutation");
            }
            seen[v] = true;
        }
        break;
    }
    case SftTask::script: {
        std::size_t lines = 1;
        for (char c : sample.assistant) {
            if (c == '\n') {
                ++lines;
            }
        }
        if (lines != candidates) {
            throw data_error("script assistant has " + std::to_string(lines) +
                             " lines for " + std::to_string(candidates) + " clips");
        }
        break;
    }
    case SftTask::bgm: {
        // Exactly one audio code group: levels 0..L-1 in order.
        TokenScanner scanner{sample.assistant, vocab};
        std::optional<std::uint32_t> token;
        std::size_t level = 0;
        for (;;) {
            const std::string text = scanner.next(token);
            if (!text.empty()) {
                throw data_error("bgm assistant contains non-token text");
            }
            if (!token) {
                break;
            }
            const auto ref = vocab.parse(*token);
            if (ref.modality != Modality::audio || ref.level != level) {
                throw data_error("bgm assistant tokens must cover audio levels in order");
            }
            ++level;
        }
        if (level == 0) {
            throw data_error("bgm assistant is empty");
        }
        break;
    }
    }
}

std::string sft_to_jsonl(const SftSample& sample) {
    json j{{"system", sample.system},
           {"conversations",
            json::array({json{{"from", "human"}, {"value", sample.human}},
                         json{{"from", "assistant"}, {"value", sample.assistant}}})},
           {"task", sft_task_name(sample.task)},
           {"provenance", {{"photo_id", sample.photo_id}, {"seed", sample.seed}}}};
    return j.dump();
}

SftSample sft_from_jsonl(const std::string& line) {
    const json j = json::parse(line);
    SftSample sample;
    sample.system = j.at("system").get<std::string>();
    const auto& conv = j.at("conversations");
    if (!conv.is_array() || conv.size() != 2 || conv[0].at("from") != "human" ||
        conv[1].at("from") != "assistant") {
        throw data_error("sft sample must hold exactly one human/assistant exchange");
    }
    sample.human = conv[0].at("value").get<std::string>();
    sample.assistant = conv[1].at("value").get<std::string>();
    sample.task = sft_task_from_name(j.at("task").get<std::string>());
    sample.photo_id = j.at("provenance").at("photo_id").get<std::string>();
    sample.seed = j.at("provenance").at("seed").get<std::uint64_t>();
    return sample;
}

} // namespace autocut
