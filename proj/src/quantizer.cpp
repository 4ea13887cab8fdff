#include "autocut/quantizer.hpp"

#include "autocut/kernels.hpp"
#include "autocut/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace autocut {

void QuantizerConfig::validate() const {
    if (levels < 1) {
        throw config_error("quantizer levels must be >= 1");
    }
    if (codebook_size < 1 || codebook_size > 65536) {
        throw config_error("codebook_size must be in [1, 65536]");
    }
    if (mode == QuantizerMode::raw_rvq && codebook_dim != input_dim) {
        throw config_error("raw_rvq requires codebook_dim == input_dim");
    }
    if (lr_init <= 0.0 || lr_min <= 0.0 || lr_min > lr_init) {
        throw config_error("learning rate schedule requires 0 < lr_min <= lr_init");
    }
    if (batch_size < 1 || max_epochs < 1) {
        throw config_error("batch_size and max_epochs must be >= 1");
    }
}

QuantizerConfig default_video_config() {
    QuantizerConfig c;
    c.modality = Modality::video;
    c.input_dim = 128;
    c.codebook_dim = 128;
    c.encoder_widths = {512, 512};
    c.decoder_widths = {512, 512};
    c.max_epochs = 20;
    return c;
}

QuantizerConfig default_audio_config() {
    QuantizerConfig c;
    c.modality = Modality::audio;
    c.input_dim = 2048;
    c.codebook_dim = 256;
    c.encoder_widths = {1024, 512};
    c.decoder_widths = {512, 1024};
    c.max_epochs = 50;
    return c;
}

namespace {

template <typename T>
double cosine_loss_impl(std::span<const T> f_hat, std::span<const T> f, bool* degenerate) {
    if (f_hat.size() != f.size()) {
        throw data_error("cosine_loss dimension mismatch: " + std::to_string(f_hat.size()) +
                         " vs " + std::to_string(f.size()));
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        dot += static_cast<double>(f_hat[i]) * static_cast<double>(f[i]);
        na += static_cast<double>(f_hat[i]) * static_cast<double>(f_hat[i]);
        nb += static_cast<double>(f[i]) * static_cast<double>(f[i]);
    }
    if (na == 0.0 || nb == 0.0) {
        if (degenerate != nullptr) {
            *degenerate = true;
        }
        return 1.0;
    }
    if (degenerate != nullptr) {
        *degenerate = false;
    }
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return 1.0 - std::clamp(c, -1.0, 1.0);
}

} // namespace

double cosine_loss(std::span<const float> f_hat, std::span<const float> f, bool* degenerate) {
    return cosine_loss_impl(f_hat, f, degenerate);
}

double cosine_loss(std::span<const double> f_hat, std::span<const double> f, bool* degenerate) {
    return cosine_loss_impl(f_hat, f, degenerate);
}

std::vector<double> cosine_loss_gradient(std::span<const double> f_hat,
                                         std::span<const double> f) {
    if (f_hat.size() != f.size()) {
        throw data_error("cosine_loss_gradient dimension mismatch");
    }
    const std::size_t dim = f_hat.size();
    double dot = 0.0;
    double na2 = 0.0;
    double nb2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        dot += f_hat[i] * f[i];
        na2 += f_hat[i] * f_hat[i];
        nb2 += f[i] * f[i];
    }
    std::vector<double> grad(dim, 0.0);
    if (na2 == 0.0 || nb2 == 0.0) {
        return grad;
    }
    const double inv = 1.0 / (std::sqrt(na2) * std::sqrt(nb2));
    const double proj = dot / na2;
    for (std::size_t i = 0; i < dim; ++i) {
        grad[i] = -inv * (f[i] - proj * f_hat[i]);
    }
    return grad;
}

namespace {

// Mean cosine loss of (x - residual + assigned codeword) against x,
// blocked so the summation order is fixed.
double partial_recon_loss(const std::vector<float>& data, const std::vector<float>& residuals,
                          const std::uint16_t* codes, const QuantizerModel& model,
                          std::size_t level, std::size_t n, std::size_t dim) {
    const std::size_t nblocks = (n + kernels::kBlock - 1) / kernels::kBlock;
    std::vector<double> partial(nblocks, 0.0);
    const auto sum_block = [&](std::size_t blk) {
        const std::size_t lo = blk * kernels::kBlock;
        const std::size_t hi = std::min(lo + kernels::kBlock, n);
        double acc = 0.0;
        std::vector<float> recon(dim);
        for (std::size_t i = lo; i < hi; ++i) {
            const float* x = data.data() + i * dim;
            const float* r = residuals.data() + i * dim;
            const float* c = model.codeword(level, codes[i]);
            for (std::size_t d = 0; d < dim; ++d) {
                recon[d] = x[d] - r[d] + c[d];
            }
            acc += cosine_loss(std::span<const float>(recon),
                               std::span<const float>(x, dim));
        }
        return acc;
    };
#ifdef AUTOCUT_HAVE_OPENMP
    if (kernels::parallel_enabled() && n >= 2 * kernels::kBlock) {
        const auto sb = static_cast<std::int64_t>(nblocks);
#pragma omp parallel for schedule(static)
        for (std::int64_t b = 0; b < sb; ++b) {
            partial[b] = sum_block(static_cast<std::size_t>(b));
        }
    } else
#endif
    {
        for (std::size_t b = 0; b < nblocks; ++b) {
            partial[b] = sum_block(b);
        }
    }
    double total = 0.0;
    for (double p : partial) {
        total += p;
    }
    return total / static_cast<double>(n);
}

void train_raw_rvq(QuantizerModel& model, const EmbeddingMatrix& embeddings) {
    const QuantizerConfig& cfg = model.config;
    const std::size_t n = embeddings.rows;
    const std::size_t dim = cfg.codebook_dim;
    const std::size_t levels = cfg.levels;
    const std::size_t k = cfg.codebook_size;

    std::vector<float> residuals = embeddings.data;
    std::vector<std::uint16_t> codes(n);
    std::vector<std::uint16_t> prev_codes(n);
    std::vector<double> sums(k * dim);
    std::vector<std::uint32_t> counts(k);
    Rng rng(cfg.seed);

    model.codebooks.assign(levels * k * dim, 0.0f);

    for (std::size_t level = 0; level < levels; ++level) {
        float* codebook = model.codebooks.data() + level * k * dim;

        // Seed codewords from distinct residual rows.
        const auto seeds = rng.sample_distinct(n, k);
        for (std::size_t j = 0; j < k; ++j) {
            std::memcpy(codebook + j * dim, residuals.data() + seeds[j] * dim,
                        dim * sizeof(float));
        }

        bool have_prev = false;
        for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
            kernels::assign_nearest(residuals.data(), n, dim, codebook, k, codes.data(),
                                    nullptr);
            const double loss =
                partial_recon_loss(embeddings.data, residuals, codes.data(), model, level, n, dim);
            if (!std::isfinite(loss)) {
                throw data_error("non-finite training loss at level " + std::to_string(level) +
                                 " epoch " + std::to_string(epoch));
            }
            model.training_log.push_back(loss);
            if (have_prev && codes == prev_codes) {
                break; // assignment stable
            }
            prev_codes = codes;
            have_prev = true;

            kernels::accumulate_codes(residuals.data(), n, dim, codes.data(), k, sums.data(),
                                      counts.data());
            for (std::size_t j = 0; j < k; ++j) {
                float* cw = codebook + j * dim;
                if (counts[j] > 0) {
                    const double inv = 1.0 / static_cast<double>(counts[j]);
                    for (std::size_t d = 0; d < dim; ++d) {
                        cw[d] = static_cast<float>(sums[j * dim + d] * inv);
                    }
                } else {
                    // Dead codeword: reseed from a random residual row.
                    std::memcpy(cw, residuals.data() + rng.below(n) * dim, dim * sizeof(float));
                }
            }
        }

        // Final assignment under the converged codebook, then peel the level.
        kernels::assign_nearest(residuals.data(), n, dim, codebook, k, codes.data(), nullptr);
        for (std::size_t i = 0; i < n; ++i) {
            const float* cw = codebook + static_cast<std::size_t>(codes[i]) * dim;
            float* r = residuals.data() + i * dim;
            for (std::size_t d = 0; d < dim; ++d) {
                r[d] -= cw[d];
            }
        }
    }
}

// Quantizes z against the model codebooks; returns selected codes and
// accumulates the quantized vector into zq. Residual inputs per level are
// reported through level_inputs for the EMA statistics.
void quantize_vector(const QuantizerModel& model, const std::vector<float>& z,
                     std::uint16_t* codes_out, std::vector<float>& zq,
                     std::vector<std::vector<float>>* level_inputs) {
    const std::size_t dim = model.config.codebook_dim;
    const std::size_t k = model.config.codebook_size;
    std::vector<float> residual = z;
    zq.assign(dim, 0.0f);
    for (std::size_t level = 0; level < model.config.levels; ++level) {
        if (level_inputs != nullptr) {
            (*level_inputs)[level] = residual;
        }
        std::uint16_t code = 0;
        kernels::assign_nearest_serial(residual.data(), 1, dim,
                                       model.codebooks.data() + level * k * dim, k, &code,
                                       nullptr);
        codes_out[level] = code;
        const float* cw = model.codeword(level, code);
        for (std::size_t d = 0; d < dim; ++d) {
            residual[d] -= cw[d];
            zq[d] += cw[d];
        }
    }
}

void train_rqvae(QuantizerModel& model, const EmbeddingMatrix& embeddings) {
    const QuantizerConfig& cfg = model.config;
    const std::size_t n = embeddings.rows;
    const std::size_t in_dim = cfg.input_dim;
    const std::size_t code_dim = cfg.codebook_dim;
    const std::size_t levels = cfg.levels;
    const std::size_t k = cfg.codebook_size;
    constexpr double kEmaDecay = 0.99;

    Rng rng(cfg.seed);

    std::vector<std::size_t> enc_dims{in_dim};
    enc_dims.insert(enc_dims.end(), cfg.encoder_widths.begin(), cfg.encoder_widths.end());
    enc_dims.push_back(code_dim);
    std::vector<std::size_t> dec_dims{code_dim};
    dec_dims.insert(dec_dims.end(), cfg.decoder_widths.begin(), cfg.decoder_widths.end());
    dec_dims.push_back(in_dim);
    model.encoder = Mlp::make(enc_dims, rng);
    model.decoder = Mlp::make(dec_dims, rng);

    model.codebooks.resize(levels * k * code_dim);
    const double cb_scale = 1.0 / std::sqrt(static_cast<double>(code_dim));
    for (auto& v : model.codebooks) {
        v = static_cast<float>(rng.gaussian() * cb_scale);
    }

    std::vector<double> ema_counts(levels * k, 0.0);
    std::vector<double> ema_sums(levels * k * code_dim, 0.0);
    for (std::size_t i = 0; i < model.codebooks.size(); ++i) {
        ema_sums[i] = model.codebooks[i];
    }

    const std::size_t batch = std::min(cfg.batch_size, n);
    const std::size_t batches_per_epoch = (n + batch - 1) / batch;
    const std::size_t total_steps = cfg.max_epochs * batches_per_epoch;
    std::size_t step = 0;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }

    std::vector<std::uint16_t> codes(levels);
    std::vector<std::vector<float>> level_inputs(levels, std::vector<float>(code_dim));
    std::vector<std::uint8_t> used(levels * k);

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        std::fill(used.begin(), used.end(), 0);
        double epoch_loss = 0.0;
        std::size_t epoch_samples = 0;

        for (std::size_t b = 0; b < batches_per_epoch; ++b) {
            const std::size_t lo = b * batch;
            const std::size_t hi = std::min(lo + batch, n);
            const std::size_t bs = hi - lo;

            MlpGrads enc_grads = MlpGrads::zeros_like(model.encoder);
            MlpGrads dec_grads = MlpGrads::zeros_like(model.decoder);
            std::vector<double> batch_counts(levels * k, 0.0);
            std::vector<double> batch_sums(levels * k * code_dim, 0.0);
            double batch_loss = 0.0;

            for (std::size_t s = lo; s < hi; ++s) {
                const float* xf = embeddings.row(order[s]);
                std::vector<double> x(xf, xf + in_dim);

                MlpTrace enc_trace;
                const std::vector<double> z = forward_trace(model.encoder, x, enc_trace);
                std::vector<float> zf(code_dim);
                for (std::size_t d = 0; d < code_dim; ++d) {
                    zf[d] = static_cast<float>(z[d]);
                }
                std::vector<float> zq;
                quantize_vector(model, zf, codes.data(), zq, &level_inputs);
                for (std::size_t level = 0; level < levels; ++level) {
                    const std::size_t slot = level * k + codes[level];
                    used[slot] = 1;
                    batch_counts[slot] += 1.0;
                    double* sum = batch_sums.data() + slot * code_dim;
                    const std::vector<float>& li = level_inputs[level];
                    for (std::size_t d = 0; d < code_dim; ++d) {
                        sum[d] += li[d];
                    }
                }

                std::vector<double> dec_in(code_dim);
                for (std::size_t d = 0; d < code_dim; ++d) {
                    dec_in[d] = static_cast<double>(zq[d]);
                }
                MlpTrace dec_trace;
                const std::vector<double> f_hat =
                    forward_trace(model.decoder, dec_in, dec_trace);

                batch_loss += cfg.recon_weight *
                              cosine_loss_impl(std::span<const double>(f_hat),
                                               std::span<const double>(x), nullptr);

                std::vector<double> dloss = cosine_loss_gradient(f_hat, x);
                for (auto& g : dloss) {
                    g *= cfg.recon_weight;
                }
                // Straight-through: the gradient at the decoder input
                // passes to the encoder output unchanged.
                const std::vector<double> dz =
                    backward(model.decoder, dec_trace, dloss, dec_grads);
                backward(model.encoder, enc_trace, dz, enc_grads);
            }

            if (!std::isfinite(batch_loss)) {
                throw data_error("non-finite rqvae training loss at epoch " +
                                 std::to_string(epoch));
            }
            epoch_loss += batch_loss;
            epoch_samples += bs;

            const double inv_bs = 1.0 / static_cast<double>(bs);
            enc_grads.scale(inv_bs);
            dec_grads.scale(inv_bs);
            const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
            const double lr =
                cfg.lr_min + 0.5 * (cfg.lr_init - cfg.lr_min) *
                                 (1.0 + std::cos(3.14159265358979323846 * progress));
            apply_sgd(model.encoder, enc_grads, lr, cfg.weight_decay);
            apply_sgd(model.decoder, dec_grads, lr, cfg.weight_decay);
            ++step;

            // EMA codebook update; commitment term is configured to 0 so
            // the codebooks learn only through these statistics.
            for (std::size_t slot = 0; slot < levels * k; ++slot) {
                ema_counts[slot] =
                    kEmaDecay * ema_counts[slot] + (1.0 - kEmaDecay) * batch_counts[slot];
                double* es = ema_sums.data() + slot * code_dim;
                const double* bsum = batch_sums.data() + slot * code_dim;
                for (std::size_t d = 0; d < code_dim; ++d) {
                    es[d] = kEmaDecay * es[d] + (1.0 - kEmaDecay) * bsum[d];
                }
                if (ema_counts[slot] > 1e-9) {
                    float* cw = model.codebooks.data() + slot * code_dim;
                    for (std::size_t d = 0; d < code_dim; ++d) {
                        cw[d] = static_cast<float>(es[d] / ema_counts[slot]);
                    }
                }
            }
        }

        // Reseed codewords unused for the whole epoch from the encoded
        // residual of a random row.
        for (std::size_t level = 0; level < levels; ++level) {
            for (std::size_t j = 0; j < k; ++j) {
                if (used[level * k + j]) {
                    continue;
                }
                const float* xf = embeddings.row(rng.below(n));
                const std::vector<double> z =
                    model.encoder.forward(std::vector<double>(xf, xf + in_dim));
                std::vector<float> residual(code_dim);
                for (std::size_t d = 0; d < code_dim; ++d) {
                    residual[d] = static_cast<float>(z[d]);
                }
                for (std::size_t l2 = 0; l2 < level; ++l2) {
                    std::uint16_t c = 0;
                    kernels::assign_nearest_serial(
                        residual.data(), 1, code_dim,
                        model.codebooks.data() + l2 * k * code_dim, k, &c, nullptr);
                    const float* cw = model.codeword(l2, c);
                    for (std::size_t d = 0; d < code_dim; ++d) {
                        residual[d] -= cw[d];
                    }
                }
                float* cw = model.codebooks.data() + (level * k + j) * code_dim;
                std::memcpy(cw, residual.data(), code_dim * sizeof(float));
                ema_counts[level * k + j] = 1.0;
                double* es = ema_sums.data() + (level * k + j) * code_dim;
                for (std::size_t d = 0; d < code_dim; ++d) {
                    es[d] = residual[d];
                }
            }
        }

        model.training_log.push_back(epoch_loss / static_cast<double>(epoch_samples));
    }
}

} // namespace

QuantizerModel train_quantizer(const EmbeddingMatrix& embeddings, const QuantizerConfig& config) {
    config.validate();
    if (embeddings.dim != config.input_dim) {
        throw data_error("embedding dim " + std::to_string(embeddings.dim) +
                         " does not match quantizer input_dim " +
                         std::to_string(config.input_dim));
    }
    if (embeddings.rows < config.codebook_size) {
        throw data_error("training needs at least codebook_size rows: " +
                         std::to_string(embeddings.rows) + " < " +
                         std::to_string(config.codebook_size));
    }
    QuantizerModel model;
    model.config = config;
    if (config.mode == QuantizerMode::raw_rvq) {
        train_raw_rvq(model, embeddings);
    } else {
        train_rqvae(model, embeddings);
    }
    // Final replay over the training set; the last log entry is the
    // converged mean loss.
    model.trained = true;
    ReconstructionReport rep = reconstruction_report(model, embeddings);
    model.training_log.push_back(1.0 - rep.mean_cos_sim);
    return model;
}

CodeGroup encode(const QuantizerModel& model, std::span<const float> x) {
    if (!model.trained) {
        throw data_error("encode called on an untrained quantizer");
    }
    if (x.size() != model.config.input_dim) {
        throw data_error("encode input dim " + std::to_string(x.size()) +
                         " != quantizer input_dim " + std::to_string(model.config.input_dim));
    }
    CodeGroup group;
    group.modality = model.config.modality;
    group.codes.resize(model.config.levels);
    encode_batch(model, x.data(), 1, group.codes.data());
    return group;
}

void encode_batch(const QuantizerModel& model, const float* rows, std::size_t n,
                  std::uint16_t* codes_out) {
    if (!model.trained) {
        throw data_error("encode called on an untrained quantizer");
    }
    const std::size_t in_dim = model.config.input_dim;
    const std::size_t dim = model.config.codebook_dim;
    const std::size_t levels = model.config.levels;
    const std::size_t k = model.config.codebook_size;

    // Latent residual matrix: raw input in raw_rvq mode, encoder output
    // in rqvae mode.
    std::vector<float> residuals;
    if (model.config.mode == QuantizerMode::raw_rvq) {
        residuals.assign(rows, rows + n * dim);
    } else {
        residuals.resize(n * dim);
        for (std::size_t i = 0; i < n; ++i) {
            const std::vector<double> z = model.encoder.forward(
                std::vector<double>(rows + i * in_dim, rows + (i + 1) * in_dim));
            for (std::size_t d = 0; d < dim; ++d) {
                residuals[i * dim + d] = static_cast<float>(z[d]);
            }
        }
    }

    std::vector<std::uint16_t> level_codes(n);
    for (std::size_t level = 0; level < levels; ++level) {
        const float* codebook = model.codebooks.data() + level * k * dim;
        kernels::assign_nearest(residuals.data(), n, dim, codebook, k, level_codes.data(),
                                nullptr);
        for (std::size_t i = 0; i < n; ++i) {
            codes_out[i * levels + level] = level_codes[i];
            const float* cw = codebook + static_cast<std::size_t>(level_codes[i]) * dim;
            float* r = residuals.data() + i * dim;
            for (std::size_t d = 0; d < dim; ++d) {
                r[d] -= cw[d];
            }
        }
    }
}

std::vector<float> decode(const QuantizerModel& model, const CodeGroup& group) {
    if (!model.trained) {
        throw data_error("decode called on an untrained quantizer");
    }
    if (group.codes.size() != model.config.levels) {
        throw data_error("code group has " + std::to_string(group.codes.size()) +
                         " levels, quantizer expects " + std::to_string(model.config.levels));
    }
    const std::size_t dim = model.config.codebook_dim;
    std::vector<float> sum(dim, 0.0f);
    for (std::size_t level = 0; level < group.codes.size(); ++level) {
        const std::uint16_t code = group.codes[level];
        if (code >= model.config.codebook_size) {
            throw data_error("code index " + std::to_string(code) + " out of range [0, " +
                             std::to_string(model.config.codebook_size) + ")");
        }
        const float* cw = model.codeword(level, code);
        for (std::size_t d = 0; d < dim; ++d) {
            sum[d] += cw[d];
        }
    }
    if (model.config.mode == QuantizerMode::raw_rvq) {
        return sum;
    }
    const std::vector<double> out =
        model.decoder.forward(std::vector<double>(sum.begin(), sum.end()));
    std::vector<float> outf(out.size());
    for (std::size_t d = 0; d < out.size(); ++d) {
        outf[d] = static_cast<float>(out[d]);
    }
    return outf;
}

ReconstructionReport reconstruction_report(const QuantizerModel& model,
                                           const EmbeddingMatrix& embeddings) {
    if (embeddings.rows == 0) {
        throw data_error("reconstruction report on an empty matrix");
    }
    if (embeddings.dim != model.config.input_dim) {
        throw data_error("reconstruction report dim mismatch");
    }
    const std::size_t n = embeddings.rows;
    const std::size_t dim = model.config.codebook_dim;
    const std::size_t in_dim = model.config.input_dim;
    const std::size_t levels = model.config.levels;

    std::vector<std::uint16_t> codes(n * levels);
    encode_batch(model, embeddings.data.data(), n, codes.data());

    ReconstructionReport report;
    report.per_level_curve.resize(levels);

    std::vector<float> partial(n * dim, 0.0f); // cumulative codeword sums
    std::vector<float> recon;
    for (std::size_t level = 0; level < levels; ++level) {
        for (std::size_t i = 0; i < n; ++i) {
            const float* cw = model.codeword(level, codes[i * levels + level]);
            float* p = partial.data() + i * dim;
            for (std::size_t d = 0; d < dim; ++d) {
                p[d] += cw[d];
            }
        }
        const float* recon_rows = nullptr;
        if (model.config.mode == QuantizerMode::raw_rvq) {
            recon_rows = partial.data();
        } else {
            recon.resize(n * in_dim);
            for (std::size_t i = 0; i < n; ++i) {
                const std::vector<double> out = model.decoder.forward(std::vector<double>(
                    partial.begin() + static_cast<std::ptrdiff_t>(i * dim),
                    partial.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim)));
                for (std::size_t d = 0; d < in_dim; ++d) {
                    recon[i * in_dim + d] = static_cast<float>(out[d]);
                }
            }
            recon_rows = recon.data();
        }
        report.per_level_curve[level] =
            kernels::mean_cosine(recon_rows, embeddings.data.data(), n, in_dim);
    }
    report.mean_cos_sim = report.per_level_curve.back();
    return report;
}

namespace {

constexpr char kQuantizerMagic[5] = "ACQZ";
constexpr std::uint32_t kQuantizerVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

void write_vec_d(std::ofstream& out, const std::vector<double>& v) {
    write_pod(out, static_cast<std::uint64_t>(v.size()));
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_vec_d(std::ifstream& in) {
    const auto size = read_pod<std::uint64_t>(in);
    std::vector<double> v(size);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(size * sizeof(double)));
    return v;
}

void write_mlp(std::ofstream& out, const Mlp& net) {
    write_pod(out, static_cast<std::uint64_t>(net.dims.size()));
    for (auto d : net.dims) {
        write_pod(out, static_cast<std::uint64_t>(d));
    }
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        write_vec_d(out, net.weights[l]);
        write_vec_d(out, net.biases[l]);
    }
}

Mlp read_mlp(std::ifstream& in) {
    Mlp net;
    const auto nd = read_pod<std::uint64_t>(in);
    net.dims.resize(nd);
    for (auto& d : net.dims) {
        d = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
    }
    for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
        net.weights.push_back(read_vec_d(in));
        net.biases.push_back(read_vec_d(in));
    }
    return net;
}

} // namespace

void save_quantizer(const QuantizerModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw data_error("cannot write quantizer model: " + path);
    }
    out.write(kQuantizerMagic, 4);
    write_pod(out, kQuantizerVersion);
    const QuantizerConfig& c = model.config;
    write_pod(out, static_cast<std::uint8_t>(c.modality));
    write_pod(out, static_cast<std::uint8_t>(c.mode));
    write_pod(out, static_cast<std::uint64_t>(c.input_dim));
    write_pod(out, static_cast<std::uint64_t>(c.levels));
    write_pod(out, static_cast<std::uint64_t>(c.codebook_size));
    write_pod(out, static_cast<std::uint64_t>(c.codebook_dim));
    write_pod(out, static_cast<std::uint8_t>(c.shared_codebook ? 1 : 0));
    write_pod(out, static_cast<std::uint64_t>(c.encoder_widths.size()));
    for (auto w : c.encoder_widths) {
        write_pod(out, static_cast<std::uint64_t>(w));
    }
    write_pod(out, static_cast<std::uint64_t>(c.decoder_widths.size()));
    for (auto w : c.decoder_widths) {
        write_pod(out, static_cast<std::uint64_t>(w));
    }
    write_pod(out, c.recon_weight);
    write_pod(out, c.commitment_weight);
    write_pod(out, c.weight_decay);
    write_pod(out, c.lr_init);
    write_pod(out, c.lr_min);
    write_pod(out, static_cast<std::uint64_t>(c.batch_size));
    write_pod(out, static_cast<std::uint64_t>(c.max_epochs));
    write_pod(out, c.seed);

    write_pod(out, static_cast<std::uint64_t>(model.codebooks.size()));
    out.write(reinterpret_cast<const char*>(model.codebooks.data()),
              static_cast<std::streamsize>(model.codebooks.size() * sizeof(float)));
    write_mlp(out, model.encoder);
    write_mlp(out, model.decoder);
    write_vec_d(out, model.training_log);
    if (!out) {
        throw data_error("short write on quantizer model: " + path);
    }
}

QuantizerModel load_quantizer(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw data_error("cannot open quantizer model: " + path);
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kQuantizerMagic, 4) != 0) {
        throw data_error("not a quantizer model file: " + path);
    }
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kQuantizerVersion) {
        throw data_error("unsupported quantizer model version " + std::to_string(version));
    }
    QuantizerModel model;
    QuantizerConfig& c = model.config;
    c.modality = static_cast<Modality>(read_pod<std::uint8_t>(in));
    c.mode = static_cast<QuantizerMode>(read_pod<std::uint8_t>(in));
    c.input_dim = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
    c.levels = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
    c.codebook_size = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
    c.codebook_dim = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
    c.shared_codebook = read_pod<std::uint8_t>(in) != 0;
    c.encoder_widths.resize(static_cast<std::size_t>(read_pod<std::uint64_t>(in)));
    for (auto& w : c.encoder_widths) {
        w = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
    }
    c.decoder_widths.resize(static_cast<std::size_t>(read_pod<std::uint64_t>(in)));
    for (auto& w : c.decoder_widths) {
        w = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
    }
    c.recon_weight = read_pod<double>(in);
    c.commitment_weight = read_pod<double>(in);
    c.weight_decay = read_pod<double>(in);
    c.lr_init = read_pod<double>(in);
    c.lr_min = read_pod<double>(in);
    c.batch_size = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
    c.max_epochs = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
    c.seed = read_pod<std::uint64_t>(in);

    model.codebooks.resize(static_cast<std::size_t>(read_pod<std::uint64_t>(in)));
    in.read(reinterpret_cast<char*>(model.codebooks.data()),
            static_cast<std::streamsize>(model.codebooks.size() * sizeof(float)));
    model.encoder = read_mlp(in);
    model.decoder = read_mlp(in);
    model.training_log = read_vec_d(in);
    if (!in) {
        throw data_error("truncated quantizer model: " + path);
    }
    model.trained = true;
    return model;
}

} // namespace autocut
