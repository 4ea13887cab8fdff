#include "autocut/embedding.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace autocut {

void EmbeddingMatrix::rebuild_key_index() {
    key_index.clear();
    key_index.reserve(row_keys.size());
    for (std::size_t i = 0; i < row_keys.size(); ++i) {
        auto [it, inserted] = key_index.emplace(row_keys[i], i);
        if (!inserted) {
            throw data_error("duplicate embedding row key: \"" + row_keys[i] + "\"");
        }
    }
}

void EmbeddingMatrix::validate() const {
    if (data.size() != rows * dim) {
        throw data_error("embedding data length " + std::to_string(data.size()) +
                         " != rows*dim = " + std::to_string(rows * dim));
    }
    if (row_keys.size() != rows) {
        throw data_error("embedding key count " + std::to_string(row_keys.size()) +
                         " != rows = " + std::to_string(rows));
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            throw data_error("non-finite embedding value in row key \"" +
                             row_keys[i / dim] + "\"");
        }
    }
    if (key_index.size() != rows) {
        throw data_error("embedding key index out of sync");
    }
}

EmbeddingMatrix load_embeddings(const std::string& data_path, const std::string& keys_path,
                                Modality modality, std::size_t expected_dim) {
    std::ifstream keys(keys_path);
    if (!keys) {
        throw data_error("cannot open key file: " + keys_path);
    }
    std::string header;
    if (!std::getline(keys, header)) {
        throw data_error("empty key file: " + keys_path);
    }
    std::size_t dim = 0;
    std::size_t rows = 0;
    if (std::sscanf(header.c_str(), "dim=%zu rows=%zu", &dim, &rows) != 2) {
        throw data_error("malformed key header \"" + header + "\" in " + keys_path);
    }
    if (expected_dim != 0 && dim != expected_dim) {
        throw data_error("embedding dim " + std::to_string(dim) + " in " + keys_path +
                         " does not match configured dim " + std::to_string(expected_dim));
    }

    EmbeddingMatrix m;
    m.modality = modality;
    m.dim = dim;
    m.rows = rows;
    m.row_keys.reserve(rows);
    std::string line;
    while (std::getline(keys, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            m.row_keys.push_back(line);
        }
    }
    if (m.row_keys.size() != rows) {
        throw data_error("key file " + keys_path + " lists " +
                         std::to_string(m.row_keys.size()) + " keys, header says " +
                         std::to_string(rows));
    }

    std::ifstream blob(data_path, std::ios::binary);
    if (!blob) {
        throw data_error("cannot open embedding file: " + data_path);
    }
    blob.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(blob.tellg());
    blob.seekg(0);
    if (bytes != rows * dim * sizeof(float)) {
        throw data_error("embedding file " + data_path + " holds " + std::to_string(bytes) +
                         " bytes, expected " + std::to_string(rows * dim * sizeof(float)));
    }
    m.data.resize(rows * dim);
    blob.read(reinterpret_cast<char*>(m.data.data()),
              static_cast<std::streamsize>(bytes));
    if (!blob) {
        throw data_error("short read on embedding file: " + data_path);
    }

    m.rebuild_key_index();
    m.validate();
    return m;
}

void save_embeddings(const EmbeddingMatrix& m, const std::string& data_path,
                     const std::string& keys_path) {
    {
        std::ofstream blob(data_path, std::ios::binary | std::ios::trunc);
        if (!blob) {
            throw data_error("cannot write embedding file: " + data_path);
        }
        blob.write(reinterpret_cast<const char*>(m.data.data()),
                   static_cast<std::streamsize>(m.data.size() * sizeof(float)));
    }
    std::ofstream keys(keys_path, std::ios::trunc);
    if (!keys) {
        throw data_error("cannot write key file: " + keys_path);
    }
    keys << "dim=" << m.dim << " rows=" << m.rows << "\n";
    for (const auto& k : m.row_keys) {
        keys << k << "\n";
    }
}

} // namespace autocut
