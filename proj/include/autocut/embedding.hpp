#pragma once

#include "autocut/common.hpp"

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace autocut {

// Row-major float32 matrix with one asset key per row. On disk this is a
// raw little-endian blob (`<name>.f32`) next to a key list
// (`<name>.keys`) whose first line declares `dim=<n> rows=<m>`.
struct EmbeddingMatrix {
    Modality modality = Modality::video;
    std::size_t dim = 0;
    std::size_t rows = 0;
    std::vector<float> data;
    std::vector<std::string> row_keys;
    std::unordered_map<std::string, std::size_t> key_index;

    const float* row(std::size_t i) const { return data.data() + i * dim; }

    // -1 when absent.
    std::ptrdiff_t find(const std::string& key) const {
        auto it = key_index.find(key);
        return it == key_index.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
    }

    void rebuild_key_index();

    // Validates data length, finiteness and key uniqueness.
    void validate() const;
};

EmbeddingMatrix load_embeddings(const std::string& data_path, const std::string& keys_path,
                                Modality modality, std::size_t expected_dim);

void save_embeddings(const EmbeddingMatrix& m, const std::string& data_path,
                     const std::string& keys_path);

} // namespace autocut
