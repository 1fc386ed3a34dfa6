#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "typomerge/aggregation.hpp"
#include "typomerge/checkpoint.hpp"
#include "typomerge/language.hpp"

namespace typomerge {

// Container layout (safetensors-compatible):
//   u64 little-endian header length N
//   N bytes of UTF-8 JSON: {name: {"dtype", "shape", "data_offsets": [begin, end]}}
//   raw little-endian payload, tensors contiguous in name order
// Written headers have sorted keys and are space-padded so the payload starts
// on an 8-byte boundary.

struct ReadOptions {
  /// Up-cast F16/BF16 tensors to F32 instead of rejecting them.
  bool cast_f32 = false;
  bool allow_nonfinite = false;
  /// Language recorded in a synthesized manifest when no sidecar exists.
  std::string language_hint;
};

/// Encodes tensors only; the manifest lives in the sidecar.
std::string serialize_container(const AdapterCheckpoint& ckpt);

/// Decodes a container held in memory. The result has a synthesized manifest.
AdapterCheckpoint parse_container(std::string_view bytes, const ReadOptions& options = {});

/// `adapter.bin` -> `adapter.json`, `de.bin` -> `de.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint_path);

AdapterCheckpoint read_checkpoint(const std::filesystem::path& path, const ReadOptions& options = {});

/// Writes the container and its sidecar manifest, each via a temp file and
/// rename. Identical checkpoints give identical bytes. Throws Error(IoError).
void write_checkpoint(const AdapterCheckpoint& ckpt, const std::filesystem::path& path);

/// Atomically replaces `path` with `contents`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

struct PoolEntry {
  std::filesystem::path checkpoint_path;
  std::optional<std::filesystem::path> manifest_path;
};

struct PoolDescriptor {
  std::filesystem::path root;
  std::map<LanguageId, PoolEntry> members;
  /// Set when the pool holds an English adapter ("en" or "eng").
  std::optional<LanguageId> english;
};

struct LoadedPool {
  PoolDescriptor descriptor;
  AdapterPool adapters;
};

/// Discovers `root/<lang>/adapter.bin` and `root/<lang>.bin` without reading
/// tensors. Throws Error(EmptyPool|DuplicateLanguage|IoError).
PoolDescriptor scan_pool(const std::filesystem::path& root);

/// scan_pool, then reads every member and checks that all schemas agree.
LoadedPool load_pool(const std::filesystem::path& root, const ReadOptions& options = {});

/// Writes `root/<lang>/adapter.bin` + `adapter.json` for every member.
void write_pool(const AdapterPool& pool, const std::filesystem::path& root);

}  // namespace typomerge
