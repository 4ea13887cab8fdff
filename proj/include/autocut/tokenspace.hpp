#pragma once

#include "autocut/catalog.hpp"
#include "autocut/quantizer.hpp"
#include "autocut/vocab.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace autocut {

// photo_id -> (timestamp, embedding row), ordered by timestamp. Built
// once per corpus so per-ad serialization stays linear.
struct FrameLookup {
    std::map<std::string, std::vector<std::pair<int, std::size_t>>> by_photo;

    static FrameLookup build(const EmbeddingMatrix& video_rows);
};

struct AlignmentClip {
    std::string script_line;
    std::vector<CodeGroup> frames;
};

// Parsed form of one serialized alignment line:
//   <product_begin>text<product_end>
//   { <clip_begin>text video-tokens<clip_end> }
//   <bgm_begin>audio-tokens<bgm_end>
struct AlignmentStructure {
    std::string product_text;
    std::vector<AlignmentClip> clips;
    CodeGroup bgm;
};

struct AlignmentSample {
    std::string photo_id;
    std::string text; // one line, no embedded newline
};

std::string render_product(const ProductInfo& product);

// Frames are soft-aligned to the clip whose span contains their
// timestamp; the BGM track is mean-pooled to a single code group. A clip
// without in-span frames skips the ad (reason reported, no throw).
std::optional<AlignmentSample> serialize_alignment_sample(
    const AdRecord& ad, const Vocabulary& vocab, const QuantizerModel& video_quantizer,
    const QuantizerModel& audio_quantizer, const FrameLookup& frames,
    const EmbeddingMatrix& audio_rows, std::string* skip_reason = nullptr);

AlignmentStructure parse_alignment_sample(const std::string& line, const Vocabulary& vocab);

// Mean of a track's segment rows (keys "<id>" or "<id>_<n>").
std::vector<float> pooled_bgm_embedding(const std::string& bgm_id,
                                        const EmbeddingMatrix& audio_rows);
CodeGroup pool_bgm_codes(const std::string& bgm_id, const QuantizerModel& audio_quantizer,
                         const EmbeddingMatrix& audio_rows);

enum class SftTask { select, sort, script, bgm };

const char* sft_task_name(SftTask task);
SftTask sft_task_from_name(const std::string& name);

// Two-turn sample: system instruction, one human turn, one assistant
// turn. provenance = (photo_id, seed).
struct SftSample {
    SftTask task = SftTask::select;
    std::string system;
    std::string human;
    std::string assistant;
    std::string photo_id;
    std::uint64_t seed = 0;
};

// One candidate clip owned by a foreign ad; category steers negative
// sampling.
struct CandidateClip {
    ClipRecord clip;
    std::string photo_id;
    std::string category;
};

SftSample build_selection_sample(const AdRecord& ad, const std::vector<CandidateClip>& negatives,
                                 std::uint64_t seed, const Vocabulary& vocab,
                                 const QuantizerModel& video_quantizer,
                                 const EmbeddingMatrix& video_rows);

SftSample build_sorting_sample(const AdRecord& ad, std::uint64_t seed, const Vocabulary& vocab,
                               const QuantizerModel& video_quantizer,
                               const EmbeddingMatrix& video_rows);

SftSample build_script_sample(const AdRecord& ad, const Vocabulary& vocab,
                              const QuantizerModel& video_quantizer,
                              const EmbeddingMatrix& video_rows);

SftSample build_bgm_sample(const AdRecord& ad, const Vocabulary& vocab,
                           const QuantizerModel& video_quantizer,
                           const QuantizerModel& audio_quantizer,
                           const EmbeddingMatrix& video_rows, const EmbeddingMatrix& audio_rows);

// Throws data_error when the sample violates its task grammar.
void validate_sft_sample(const SftSample& sample, const Vocabulary& vocab);

// "[0, 2, 5]" -> {0, 2, 5}; empty list "[]" allowed.
std::vector<int> parse_index_list(const std::string& s);

// Candidate lines look like "N: ...". Returns how many are listed.
std::size_t count_candidate_lines(const std::string& human);

std::string sft_to_jsonl(const SftSample& sample);
SftSample sft_from_jsonl(const std::string& line);

} // namespace autocut
