#pragma once

#include "autocut/common.hpp"
#include "autocut/embedding.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace autocut {

enum class Polarity { positive, negative };

struct ClipRecord {
    std::string clip_id;
    std::string photo_id;
    int start_frame = 0; // seconds at 1 fps
    int duration = 1;    // seconds at 1 fps
    std::string script_line;
    std::vector<std::string> frame_keys;
    std::optional<int> relevance_score; // 0..5
    std::optional<Polarity> polarity;
};

struct ProductInfo {
    std::string category;
    std::string brand;
    std::string selling_points;
};

struct Engagement {
    double ctr = 0.0;
    double like_rate = 0.0;
};

struct AdRecord {
    std::string photo_id;
    ProductInfo product;
    std::vector<std::string> script_lines;
    std::vector<ClipRecord> clips;
    std::optional<std::string> bgm_id;
    double video_duration = 0.0; // seconds
    std::optional<Engagement> engagement;
    bool has_speech = true; // upstream speech/lyrics classifier flag
};

struct Catalog {
    std::vector<AdRecord> ads;
    EmbeddingMatrix video;
    EmbeddingMatrix audio;
};

struct FilterConfig {
    bool apply_duration = true;
    double max_video_duration = 120.0; // strict less-than
    bool apply_clip_length = true;
    int clip_min_duration = 2;
    int clip_max_duration = 60;
    bool apply_relevance = true;
    int relevance_min_score = 4;
    double relevance_fraction = 0.8;
    bool apply_dedup = true;
    bool apply_no_speech = false; // drops ads whose has_speech flag is false
    std::optional<double> engagement_top_fraction;
};

struct FilterReport {
    std::size_t input_count = 0;
    std::size_t kept_count = 0;
    std::size_t rejected_duration = 0;
    std::size_t rejected_clip_length = 0;
    std::size_t rejected_relevance = 0;
    std::size_t rejected_dedup = 0;
    std::size_t rejected_engagement = 0;
    std::size_t rejected_no_speech = 0;

    std::size_t total_rejected() const {
        return rejected_duration + rejected_clip_length + rejected_relevance +
               rejected_dedup + rejected_engagement + rejected_no_speech;
    }
};

struct Histogram {
    double lo = 0.0;
    double width = 1.0;
    std::vector<std::uint64_t> counts; // last bin is open-ended
};

struct StatSummary {
    std::size_t count = 0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double median = 0.0;
    Histogram histogram;
};

struct StatsReport {
    StatSummary clips_per_video;
    StatSummary clip_duration;
    StatSummary video_duration;
    StatSummary clip_text_length;
    StatSummary video_text_length;
};

// Directory layout: manifest.json + catalog.jsonl + <modality>.f32/.keys.
Catalog load_catalog(const std::string& dir);
void save_catalog(const Catalog& catalog, const std::string& dir);

std::vector<AdRecord> load_ad_records(const std::string& jsonl_path);
void save_ad_records(const std::vector<AdRecord>& ads, const std::string& jsonl_path);

// SFT curation rules in fixed order: duration, clip_length, relevance,
// dedup. Each rejected ad is attributed to the first rule it fails.
std::pair<std::vector<AdRecord>, FilterReport> filter_sft(const std::vector<AdRecord>& ads,
                                                          const FilterConfig& rules);

// Keeps the first record per normalized (brand, product, script) hash.
std::vector<AdRecord> dedup(const std::vector<AdRecord>& ads);

std::string dedup_key(const AdRecord& ad);
std::string dedup_hash(const AdRecord& ad); // hex SHA-256 of dedup_key

// Records whose ctr AND like_rate both reach the top-p band of the input
// distributions. Nearest-rank: threshold = sorted[floor((1-p)*n)].
std::vector<AdRecord> engagement_percentile_filter(const std::vector<AdRecord>& ads, double p);

StatsReport dataset_stats(const std::vector<AdRecord>& ads);

// Geometry checks on one record: id round-trips, frame keys in span,
// clip span inside the source video.
void validate_ad_record(const AdRecord& ad);

// Cross-references: every frame key and bgm id must resolve to a row.
void validate_catalog(const Catalog& catalog);

} // namespace autocut
