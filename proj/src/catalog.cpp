#include "autocut/catalog.hpp"

#include "autocut/media_id.hpp"
#include "autocut/text.hpp"

#include "json.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <unordered_set>

namespace autocut {

using nlohmann::json;

namespace {

json clip_to_json(const ClipRecord& c) {
    json j{{"clip_id", c.clip_id},
           {"photo_id", c.photo_id},
           {"start_frame", c.start_frame},
           {"duration", c.duration},
           {"script_line", c.script_line},
           {"frame_keys", c.frame_keys}};
    if (c.relevance_score) {
        j["relevance_score"] = *c.relevance_score;
    }
    if (c.polarity) {
        j["polarity"] = *c.polarity == Polarity::positive ? "positive" : "negative";
    }
    return j;
}

ClipRecord clip_from_json(const json& j) {
    ClipRecord c;
    c.clip_id = j.at("clip_id").get<std::string>();
    c.photo_id = j.at("photo_id").get<std::string>();
    c.start_frame = j.at("start_frame").get<int>();
    c.duration = j.at("duration").get<int>();
    c.script_line = j.at("script_line").get<std::string>();
    c.frame_keys = j.at("frame_keys").get<std::vector<std::string>>();
    if (j.contains("relevance_score") && !j["relevance_score"].is_null()) {
        c.relevance_score = j["relevance_score"].get<int>();
    }
    if (j.contains("polarity") && !j["polarity"].is_null()) {
        const auto p = j["polarity"].get<std::string>();
        if (p == "positive") {
            c.polarity = Polarity::positive;
        } else if (p == "negative") {
            c.polarity = Polarity::negative;
        } else {
            throw data_error("unknown clip polarity: \"" + p + "\"");
        }
    }
    return c;
}

json ad_to_json(const AdRecord& ad) {
    json j{{"photo_id", ad.photo_id},
           {"product",
            {{"category", ad.product.category},
             {"brand", ad.product.brand},
             {"selling_points", ad.product.selling_points}}},
           {"script_lines", ad.script_lines},
           {"video_duration", ad.video_duration},
           {"has_speech", ad.has_speech}};
    json clips = json::array();
    for (const auto& c : ad.clips) {
        clips.push_back(clip_to_json(c));
    }
    j["clips"] = std::move(clips);
    if (ad.bgm_id) {
        j["bgm_id"] = *ad.bgm_id;
    }
    if (ad.engagement) {
        j["engagement"] = {{"ctr", ad.engagement->ctr}, {"like_rate", ad.engagement->like_rate}};
    }
    return j;
}

AdRecord ad_from_json(const json& j) {
    AdRecord ad;
    ad.photo_id = j.at("photo_id").get<std::string>();
    const auto& p = j.at("product");
    ad.product.category = p.value("category", "");
    ad.product.brand = p.value("brand", "");
    ad.product.selling_points = p.value("selling_points", "");
    ad.script_lines = j.at("script_lines").get<std::vector<std::string>>();
    for (const auto& cj : j.at("clips")) {
        ad.clips.push_back(clip_from_json(cj));
    }
    if (j.contains("bgm_id") && !j["bgm_id"].is_null()) {
        ad.bgm_id = j["bgm_id"].get<std::string>();
    }
    ad.video_duration = j.at("video_duration").get<double>();
    if (j.contains("engagement") && !j["engagement"].is_null()) {
        Engagement e;
        e.ctr = j["engagement"].at("ctr").get<double>();
        e.like_rate = j["engagement"].at("like_rate").get<double>();
        ad.engagement = e;
    }
    ad.has_speech = j.value("has_speech", true);
    return ad;
}

} // namespace

std::vector<AdRecord> load_ad_records(const std::string& jsonl_path) {
    std::ifstream in(jsonl_path);
    if (!in) {
        throw data_error("cannot open records file: " + jsonl_path);
    }
    std::vector<AdRecord> ads;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            ads.push_back(ad_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw data_error(jsonl_path + ":" + std::to_string(line_no) +
                             ": malformed record: " + e.what());
        }
    }
    return ads;
}

void save_ad_records(const std::vector<AdRecord>& ads, const std::string& jsonl_path) {
    std::ofstream out(jsonl_path, std::ios::trunc);
    if (!out) {
        throw data_error("cannot write records file: " + jsonl_path);
    }
    for (const auto& ad : ads) {
        out << ad_to_json(ad).dump() << "\n";
    }
}

void validate_ad_record(const AdRecord& ad) {
    if (!is_digit_string(ad.photo_id)) {
        throw data_error("ad photo_id must be nonempty digits, got \"" + ad.photo_id + "\"");
    }
    for (const auto& clip : ad.clips) {
        auto [photo, start, duration] = decode_clip_id(clip.clip_id);
        if (photo != clip.photo_id || start != clip.start_frame || duration != clip.duration) {
            throw data_error("clip_id \"" + clip.clip_id +
                             "\" does not decode to its (photo_id, start_frame, duration)");
        }
        if (static_cast<double>(clip.start_frame + clip.duration) >
            ad.video_duration + 1e-9) {
            throw data_error("clip \"" + clip.clip_id + "\" extends past the source video (" +
                             std::to_string(ad.video_duration) + " s)");
        }
        for (const auto& fk : clip.frame_keys) {
            auto [fphoto, t] = decode_frame_id(fk);
            if (fphoto != clip.photo_id) {
                throw data_error("frame key \"" + fk + "\" belongs to another video than clip \"" +
                                 clip.clip_id + "\"");
            }
            if (t < clip.start_frame || t >= clip.start_frame + clip.duration) {
                throw data_error("frame key \"" + fk + "\" timestamp outside clip span of \"" +
                                 clip.clip_id + "\"");
            }
        }
    }
}

void validate_catalog(const Catalog& catalog) {
    for (const auto& ad : catalog.ads) {
        validate_ad_record(ad);
        for (const auto& clip : ad.clips) {
            for (const auto& fk : clip.frame_keys) {
                if (catalog.video.find(fk) < 0) {
                    throw data_error("dangling frame key \"" + fk +
                                     "\": no matching video embedding row");
                }
            }
        }
        if (ad.bgm_id) {
            // Track embeddings may be stored whole or as "<id>_<n>" segments.
            bool found = catalog.audio.find(*ad.bgm_id) >= 0;
            if (!found) {
                const std::string prefix = *ad.bgm_id + "_";
                for (const auto& key : catalog.audio.row_keys) {
                    if (key.rfind(prefix, 0) == 0) {
                        found = true;
                        break;
                    }
                }
            }
            if (!found) {
                throw data_error("dangling bgm_id \"" + *ad.bgm_id +
                                 "\": no matching audio embedding row");
            }
        }
    }
}

Catalog load_catalog(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    const fs::path manifest_path = root / "manifest.json";
    std::ifstream mf(manifest_path);
    if (!mf) {
        throw data_error("missing manifest: " + manifest_path.string());
    }
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw data_error("malformed manifest " + manifest_path.string() + ": " + e.what());
    }
    const int version = manifest.value("schema_version", 0);
    if (version != 1) {
        throw data_error("unsupported catalog schema_version " + std::to_string(version));
    }

    Catalog catalog;
    catalog.ads = load_ad_records((root / manifest.at("records").get<std::string>()).string());

    const auto& video = manifest.at("video");
    catalog.video = load_embeddings((root / video.at("data").get<std::string>()).string(),
                                    (root / video.at("keys").get<std::string>()).string(),
                                    Modality::video, video.at("dim").get<std::size_t>());
    const auto& audio = manifest.at("audio");
    catalog.audio = load_embeddings((root / audio.at("data").get<std::string>()).string(),
                                    (root / audio.at("keys").get<std::string>()).string(),
                                    Modality::audio, audio.at("dim").get<std::size_t>());

    validate_catalog(catalog);
    return catalog;
}

void save_catalog(const Catalog& catalog, const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root);
    save_ad_records(catalog.ads, (root / "catalog.jsonl").string());
    save_embeddings(catalog.video, (root / "video.f32").string(), (root / "video.keys").string());
    save_embeddings(catalog.audio, (root / "audio.f32").string(), (root / "audio.keys").string());
    json manifest{
        {"schema_version", 1},
        {"records", "catalog.jsonl"},
        {"video", {{"data", "video.f32"}, {"keys", "video.keys"}, {"dim", catalog.video.dim}}},
        {"audio", {{"data", "audio.f32"}, {"keys", "audio.keys"}, {"dim", catalog.audio.dim}}}};
    std::ofstream mf((root / "manifest.json").string(), std::ios::trunc);
    mf << manifest.dump(2) << "\n";
}

std::string dedup_key(const AdRecord& ad) {
    std::string script;
    for (const auto& line : ad.script_lines) {
        if (!script.empty()) {
            script += ' ';
        }
        script += line;
    }
    // 0x1f keeps field boundaries distinct; it survives normalization.
    return normalize_key(ad.product.brand) + '\x1f' +
           normalize_key(ad.product.category + " " + ad.product.selling_points) + '\x1f' +
           normalize_key(script);
}

std::string dedup_hash(const AdRecord& ad) {
    const std::string key = dedup_key(ad);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(key.data(), key.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw error("SHA-256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::vector<AdRecord> dedup(const std::vector<AdRecord>& ads) {
    std::vector<AdRecord> kept;
    std::unordered_set<std::string> seen;
    for (const auto& ad : ads) {
        if (seen.insert(dedup_hash(ad)).second) {
            kept.push_back(ad);
        }
    }
    return kept;
}

std::pair<std::vector<AdRecord>, FilterReport> filter_sft(const std::vector<AdRecord>& ads,
                                                          const FilterConfig& rules) {
    FilterReport report;
    report.input_count = ads.size();

    std::vector<AdRecord> survivors;
    for (const auto& ad : ads) {
        if (rules.apply_no_speech && !ad.has_speech) {
            ++report.rejected_no_speech;
            continue;
        }
        if (rules.apply_duration && !(ad.video_duration < rules.max_video_duration)) {
            ++report.rejected_duration;
            continue;
        }
        if (rules.apply_clip_length) {
            bool clip_ok = true;
            for (const auto& clip : ad.clips) {
                if (clip.duration < rules.clip_min_duration ||
                    clip.duration > rules.clip_max_duration) {
                    clip_ok = false;
                    break;
                }
            }
            if (!clip_ok) {
                ++report.rejected_clip_length;
                continue;
            }
        }
        if (rules.apply_relevance) {
            std::size_t scored = 0;
            std::size_t good = 0;
            for (const auto& clip : ad.clips) {
                if (!clip.relevance_score) {
                    throw data_error("relevance filter requested but clip \"" + clip.clip_id +
                                     "\" has no relevance_score");
                }
                ++scored;
                if (*clip.relevance_score >= rules.relevance_min_score) {
                    ++good;
                }
            }
            if (scored > 0 && static_cast<double>(good) <
                                  rules.relevance_fraction * static_cast<double>(scored)) {
                ++report.rejected_relevance;
                continue;
            }
        }
        survivors.push_back(ad);
    }

    if (rules.engagement_top_fraction) {
        const std::size_t before = survivors.size();
        survivors = engagement_percentile_filter(survivors, *rules.engagement_top_fraction);
        report.rejected_engagement = before - survivors.size();
    }

    if (rules.apply_dedup) {
        const std::size_t before = survivors.size();
        survivors = dedup(survivors);
        report.rejected_dedup = before - survivors.size();
    }

    report.kept_count = survivors.size();
    return {std::move(survivors), report};
}

std::vector<AdRecord> engagement_percentile_filter(const std::vector<AdRecord>& ads, double p) {
    if (!(p > 0.0) || p > 1.0) {
        throw config_error("engagement fraction must be in (0, 1], got " + std::to_string(p));
    }
    std::vector<double> ctrs;
    std::vector<double> likes;
    for (const auto& ad : ads) {
        if (!ad.engagement) {
            throw data_error("engagement filter requested but ad \"" + ad.photo_id +
                             "\" has no engagement record");
        }
        ctrs.push_back(ad.engagement->ctr);
        likes.push_back(ad.engagement->like_rate);
    }
    if (ads.empty()) {
        return {};
    }
    std::sort(ctrs.begin(), ctrs.end());
    std::sort(likes.begin(), likes.end());
    // Nearest-rank threshold at quantile q = 1-p: the (floor(q*n)+1)-th
    // smallest value. q=0 degenerates to the minimum, keeping everything.
    const auto threshold = [&](const std::vector<double>& sorted) {
        const double q = 1.0 - p;
        auto rank = static_cast<std::size_t>(q * static_cast<double>(sorted.size()));
        if (rank >= sorted.size()) {
            rank = sorted.size() - 1;
        }
        return sorted[rank];
    };
    const double ctr_min = threshold(ctrs);
    const double like_min = threshold(likes);
    std::vector<AdRecord> kept;
    for (const auto& ad : ads) {
        if (ad.engagement->ctr >= ctr_min && ad.engagement->like_rate >= like_min) {
            kept.push_back(ad);
        }
    }
    return kept;
}

namespace {

StatSummary summarize(std::vector<double> values, double lo, double width, std::size_t nbins) {
    StatSummary s;
    s.histogram.lo = lo;
    s.histogram.width = width;
    s.histogram.counts.assign(nbins, 0);
    s.count = values.size();
    if (values.empty()) {
        return s;
    }
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    s.mean = sum / static_cast<double>(values.size());
    const std::size_t mid = values.size() / 2;
    s.median = values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
    for (double v : values) {
        auto bin = static_cast<std::ptrdiff_t>((v - lo) / width);
        if (bin < 0) {
            bin = 0;
        }
        if (bin >= static_cast<std::ptrdiff_t>(nbins)) {
            bin = static_cast<std::ptrdiff_t>(nbins) - 1; // open-ended last bin
        }
        ++s.histogram.counts[static_cast<std::size_t>(bin)];
    }
    return s;
}

} // namespace

StatsReport dataset_stats(const std::vector<AdRecord>& ads) {
    std::vector<double> clips_per_video;
    std::vector<double> clip_durations;
    std::vector<double> video_durations;
    std::vector<double> clip_text_lens;
    std::vector<double> video_text_lens;
    for (const auto& ad : ads) {
        clips_per_video.push_back(static_cast<double>(ad.clips.size()));
        video_durations.push_back(ad.video_duration);
        std::size_t total_words = 0;
        for (const auto& clip : ad.clips) {
            clip_durations.push_back(static_cast<double>(clip.duration));
            const std::size_t wc = word_count(clip.script_line);
            clip_text_lens.push_back(static_cast<double>(wc));
            total_words += wc;
        }
        video_text_lens.push_back(static_cast<double>(total_words));
    }
    StatsReport r;
    r.clips_per_video = summarize(std::move(clips_per_video), 0.0, 1.0, 33);
    r.clip_duration = summarize(std::move(clip_durations), 0.0, 5.0, 21);
    r.video_duration = summarize(std::move(video_durations), 0.0, 10.0, 21);
    r.clip_text_length = summarize(std::move(clip_text_lens), 0.0, 5.0, 21);
    r.video_text_length = summarize(std::move(video_text_lens), 0.0, 25.0, 21);
    return r;
}

} // namespace autocut
