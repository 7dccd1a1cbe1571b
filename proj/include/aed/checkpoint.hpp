#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "aed/cae.hpp"
#include "aed/clf.hpp"
#include "aed/tensor.hpp"

namespace aed::io {

/// Ordered named-tensor container backing the checkpoint format.
struct NamedTensors {
    std::vector<std::pair<std::string, Tensor>> items;

    void add(std::string name, Tensor t) { items.emplace_back(std::move(name), std::move(t)); }
    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const;
};

/// Versioned binary format: magic "AEDC", format version, config hash, then
/// length-prefixed named tensors (shape header + little-endian doubles).
void save_checkpoint(const NamedTensors& tensors, std::uint64_t config_hash,
                     const std::filesystem::path& path);

NamedTensors load_checkpoint(const std::filesystem::path& path,
                             std::uint64_t* config_hash_out = nullptr);

NamedTensors pack_cae(const CaeParams& params);
CaeParams unpack_cae(const NamedTensors& t);

NamedTensors pack_frozen_cae(const FrozenCae& cae);
FrozenCae unpack_frozen_cae(const NamedTensors& t);

NamedTensors pack_clf(const ClfParams& params);
ClfParams unpack_clf(const NamedTensors& t);

/// Atomic whole-file write: write to a temp sibling, then rename.
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace aed::io
