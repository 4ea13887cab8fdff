#pragma once

#include "autocut/common.hpp"
#include "autocut/embedding.hpp"
#include "autocut/mlp.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace autocut {

enum class QuantizerMode { raw_rvq, rqvae };

// Residual quantizer hyperparameters. raw_rvq fits plain residual
// k-means codebooks on the input space; rqvae wraps them in
// encoder/decoder perceptrons trained on the cosine reconstruction loss
// with straight-through gradients and EMA codebook updates.
struct QuantizerConfig {
    Modality modality = Modality::video;
    QuantizerMode mode = QuantizerMode::raw_rvq;
    std::size_t input_dim = 128;
    std::size_t levels = 8;
    std::size_t codebook_size = 256;
    std::size_t codebook_dim = 128;
    bool shared_codebook = false;
    std::vector<std::size_t> encoder_widths{512, 512};
    std::vector<std::size_t> decoder_widths{512, 512};
    double recon_weight = 1.0;
    double commitment_weight = 0.0;
    double weight_decay = 1e-4;
    double lr_init = 1e-3;
    double lr_min = 2e-5;
    std::size_t batch_size = 8192;
    std::size_t max_epochs = 20;
    std::uint64_t seed = 0;

    void validate() const;
};

QuantizerConfig default_video_config();
QuantizerConfig default_audio_config();

struct CodeGroup {
    Modality modality = Modality::video;
    std::vector<std::uint16_t> codes; // length = levels, each < codebook_size
};

struct QuantizerModel {
    QuantizerConfig config;
    std::vector<float> codebooks; // levels x codebook_size x codebook_dim
    Mlp encoder;                  // empty in raw_rvq mode
    Mlp decoder;
    std::vector<double> training_log; // per-epoch mean cosine loss
    bool trained = false;

    const float* codeword(std::size_t level, std::size_t code) const {
        return codebooks.data() +
               (level * config.codebook_size + code) * config.codebook_dim;
    }
};

// 1 - cos(f_hat, f), range [0, 2]. All-zero input yields 1 and sets
// *degenerate when provided.
double cosine_loss(std::span<const float> f_hat, std::span<const float> f,
                   bool* degenerate = nullptr);
double cosine_loss(std::span<const double> f_hat, std::span<const double> f,
                   bool* degenerate = nullptr);

// dL/df_hat for the loss above; zero vector when either norm vanishes.
std::vector<double> cosine_loss_gradient(std::span<const double> f_hat,
                                         std::span<const double> f);

QuantizerModel train_quantizer(const EmbeddingMatrix& embeddings, const QuantizerConfig& config);

CodeGroup encode(const QuantizerModel& model, std::span<const float> x);

// codes_out holds n x levels entries, row-major.
void encode_batch(const QuantizerModel& model, const float* rows, std::size_t n,
                  std::uint16_t* codes_out);

std::vector<float> decode(const QuantizerModel& model, const CodeGroup& group);

struct ReconstructionReport {
    double mean_cos_sim = 0.0;
    std::vector<double> per_level_curve; // truncating codes to 1..L levels
};

ReconstructionReport reconstruction_report(const QuantizerModel& model,
                                           const EmbeddingMatrix& embeddings);

void save_quantizer(const QuantizerModel& model, const std::string& path);
QuantizerModel load_quantizer(const std::string& path);

} // namespace autocut
