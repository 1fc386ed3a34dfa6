#include "typomerge/adapter_io.hpp"

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "typomerge/error.hpp"

namespace typomerge {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace {

constexpr std::size_t kHeaderPrefix = 8;
// Guards against absurd header lengths before allocating.
constexpr std::uint64_t kMaxHeaderBytes = 100u << 20;

Error malformed(const std::string& what) { return Error(ErrorCode::MalformedContainer, what); }

float bf16_to_f32(std::uint16_t bits) { return std::bit_cast<float>(static_cast<std::uint32_t>(bits) << 16); }

float f16_to_f32(std::uint16_t h) {
  const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
  std::uint32_t exponent = (h >> 10) & 0x1Fu;
  std::uint32_t mantissa = h & 0x3FFu;
  std::uint32_t bits;
  if (exponent == 0x1F) {
    bits = sign | 0x7F800000u | (mantissa << 13);
  } else if (exponent == 0) {
    if (mantissa == 0) {
      bits = sign;
    } else {
      // Subnormal half: renormalize into the f32 exponent range.
      exponent = 127 - 15 + 1;
      while ((mantissa & 0x400u) == 0) {
        mantissa <<= 1;
        --exponent;
      }
      mantissa &= 0x3FFu;
      bits = sign | (exponent << 23) | (mantissa << 13);
    }
  } else {
    bits = sign | ((exponent + 127 - 15) << 23) | (mantissa << 13);
  }
  return std::bit_cast<float>(bits);
}

std::uint64_t checked_u64(const nlohmann::json& j, const std::string& what) {
  if (!j.is_number_unsigned()) {
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return j.get<std::uint64_t>();
    throw malformed(what + " must be a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

struct RawEntry {
  std::string name;
  DType dtype;
  Shape shape;
  std::uint64_t begin;
  std::uint64_t end;
};

}  // namespace

std::string serialize_container(const AdapterCheckpoint& ckpt) {
  nlohmann::json header = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    const std::uint64_t bytes = static_cast<std::uint64_t>(t.data.size()) * sizeof(float);
    header[name] = {{"dtype", "F32"}, {"shape", t.shape}, {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  std::string json = header.dump();
  json.append((8 - (kHeaderPrefix + json.size()) % 8) % 8, ' ');

  std::string out;
  out.reserve(kHeaderPrefix + json.size() + offset);
  const std::uint64_t n = json.size();
  char prefix[kHeaderPrefix];
  std::memcpy(prefix, &n, sizeof(n));
  out.append(prefix, kHeaderPrefix);
  out += json;
  for (const auto& [_, t] : ckpt.tensors) {
    out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(float));
  }
  return out;
}

AdapterCheckpoint parse_container(std::string_view bytes, const ReadOptions& options) {
  if (bytes.size() < kHeaderPrefix) throw malformed("file shorter than the 8-byte header length");
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, bytes.data(), sizeof(header_len));
  if (header_len > kMaxHeaderBytes || header_len > bytes.size() - kHeaderPrefix) {
    throw malformed("header length " + std::to_string(header_len) + " exceeds file size");
  }
  const std::string_view header_text = bytes.substr(kHeaderPrefix, header_len);
  const std::string_view payload = bytes.substr(kHeaderPrefix + header_len);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw malformed(std::string("header is not valid JSON: ") + e.what());
  }
  if (!header.is_object()) throw malformed("header is not a JSON object");

  std::vector<RawEntry> entries;
  for (const auto& [name, info] : header.items()) {
    if (name == "__metadata__") {
      if (!info.is_object()) throw malformed("__metadata__ must be an object");
      continue;
    }
    if (!info.is_object()) throw malformed("entry '" + name + "' is not an object");
    if (!info.contains("dtype") || !info["dtype"].is_string()) throw malformed("entry '" + name + "' lacks dtype");
    if (!info.contains("shape") || !info["shape"].is_array()) throw malformed("entry '" + name + "' lacks shape");
    if (!info.contains("data_offsets") || !info["data_offsets"].is_array() || info["data_offsets"].size() != 2) {
      throw malformed("entry '" + name + "' lacks data_offsets");
    }
    const auto dtype_name = info["dtype"].get<std::string>();
    auto dtype = parse_dtype(dtype_name);
    if (!dtype) throw Error(ErrorCode::UnsupportedDtype, "tensor '" + name + "' has dtype " + dtype_name);
    if (*dtype != DType::F32 && !options.cast_f32) {
      throw Error(ErrorCode::UnsupportedDtype,
                  "tensor '" + name + "' has dtype " + dtype_name + "; pass --cast-f32 to up-cast");
    }
    RawEntry e{name, *dtype, {}, 0, 0};
    for (const auto& dim : info["shape"]) {
      const auto d = checked_u64(dim, "shape of '" + name + "'");
      if (d == 0 || d > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        throw malformed("shape of '" + name + "' has a zero or oversized dimension");
      }
      e.shape.push_back(static_cast<std::int64_t>(d));
    }
    e.begin = checked_u64(info["data_offsets"][0], "data_offsets of '" + name + "'");
    e.end = checked_u64(info["data_offsets"][1], "data_offsets of '" + name + "'");
    if (e.begin > e.end || e.end > payload.size()) {
      throw malformed("data_offsets of '" + name + "' fall outside the payload");
    }
    const std::size_t count = element_count(e.shape);
    if (count > (e.end - e.begin) || (e.end - e.begin) != count * dtype_size(e.dtype)) {
      throw malformed("data_offsets of '" + name + "' do not match its shape and dtype");
    }
    entries.push_back(std::move(e));
  }

  // Offsets must tile the payload exactly: no overlap, no gaps, no trailing bytes.
  std::vector<const RawEntry*> by_offset;
  for (const auto& e : entries) by_offset.push_back(&e);
  std::sort(by_offset.begin(), by_offset.end(), [](auto* a, auto* b) {
    return a->begin != b->begin ? a->begin < b->begin : a->end < b->end;
  });
  std::uint64_t cursor = 0;
  for (const auto* e : by_offset) {
    if (e->begin < cursor) throw malformed("tensor '" + e->name + "' overlaps another tensor");
    if (e->begin > cursor) throw malformed("gap in payload before tensor '" + e->name + "'");
    cursor = e->end;
  }
  if (cursor != payload.size()) throw malformed("trailing bytes after the last tensor");

  AdapterCheckpoint ckpt;
  ckpt.manifest.language = options.language_hint.empty() ? "und" : options.language_hint;
  for (const auto& e : entries) {
    Tensor t{e.shape, std::vector<float>(element_count(e.shape))};
    const char* src = payload.data() + e.begin;
    if (e.dtype == DType::F32) {
      std::memcpy(t.data.data(), src, t.data.size() * sizeof(float));
    } else {
      for (std::size_t i = 0; i < t.data.size(); ++i) {
        std::uint16_t half;
        std::memcpy(&half, src + 2 * i, 2);
        t.data[i] = e.dtype == DType::F16 ? f16_to_f32(half) : bf16_to_f32(half);
      }
    }
    ckpt.tensors.emplace(e.name, std::move(t));
  }
  ckpt.validate(options.allow_nonfinite);
  return ckpt;
}

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint_path) {
  auto p = checkpoint_path;
  return p.replace_extension(".json");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed for " + path.string());
  return std::move(buf).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  const auto tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorCode::IoError, "write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw Error(ErrorCode::IoError, "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

AdapterCheckpoint read_checkpoint(const std::filesystem::path& path, const ReadOptions& options) {
  const std::string bytes = read_file(path);
  AdapterCheckpoint ckpt;
  try {
    ckpt = parse_container(bytes, options);
  } catch (const Error& e) {
    throw e.with_context(path.string());
  }
  const auto manifest = sidecar_path(path);
  if (std::filesystem::exists(manifest)) {
    try {
      ckpt.manifest = manifest_from_json(nlohmann::json::parse(read_file(manifest)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedFile, manifest.string() + ": " + e.what());
    } catch (const Error& e) {
      throw e.with_context(manifest.string());
    }
  }
  return ckpt;
}

void write_checkpoint(const AdapterCheckpoint& ckpt, const std::filesystem::path& path) {
  ckpt.validate(true);
  write_file_atomic(path, serialize_container(ckpt));
  write_file_atomic(sidecar_path(path), to_json(ckpt.manifest).dump(2) + "\n");
}

PoolDescriptor scan_pool(const std::filesystem::path& root) {
  std::error_code ec;
  if (!std::filesystem::is_directory(root, ec)) {
    throw Error(ErrorCode::IoError, "pool root " + root.string() + " is not a directory");
  }
  PoolDescriptor pool{root, {}, std::nullopt};
  auto add = [&](const std::string& id, const std::filesystem::path& bin) {
    LanguageId lang(id);
    PoolEntry entry{bin, std::nullopt};
    if (auto side = sidecar_path(bin); std::filesystem::exists(side)) entry.manifest_path = side;
    if (!pool.members.emplace(lang, std::move(entry)).second) {
      throw Error(ErrorCode::DuplicateLanguage, "language '" + id + "' appears twice under " + root.string());
    }
  };
  // directory_iterator order is filesystem-dependent; the map restores order.
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    const auto name = entry.path().filename().string();
    if (entry.is_directory()) {
      const auto bin = entry.path() / "adapter.bin";
      if (LanguageId::is_valid(name) && std::filesystem::is_regular_file(bin)) add(name, bin);
    } else if (entry.is_regular_file() && entry.path().extension() == ".bin") {
      const auto stem = entry.path().stem().string();
      if (LanguageId::is_valid(stem)) add(stem, entry.path());
    }
  }
  if (pool.members.empty()) throw Error(ErrorCode::EmptyPool, "no adapters found under " + root.string());
  for (const char* code : {"en", "eng"}) {
    if (pool.members.contains(LanguageId(code))) {
      pool.english = LanguageId(code);
      break;
    }
  }
  return pool;
}

LoadedPool load_pool(const std::filesystem::path& root, const ReadOptions& options) {
  LoadedPool loaded{scan_pool(root), {}};
  for (const auto& [lang, entry] : loaded.descriptor.members) {
    ReadOptions member_options = options;
    member_options.language_hint = lang.str();
    auto ckpt = read_checkpoint(entry.checkpoint_path, member_options);
    if (ckpt.manifest.language != lang.str()) {
      throw Error(ErrorCode::MalformedFile, entry.manifest_path->string() + ": manifest language '" +
                                                ckpt.manifest.language + "' does not match pool entry '" +
                                                lang.str() + "'");
    }
    loaded.adapters.emplace(lang, std::move(ckpt));
  }
  const auto& [first_lang, first] = *loaded.adapters.begin();
  const auto reference = schema_of(first);
  for (const auto& [lang, ckpt] : loaded.adapters) {
    require_same_schema(reference, first_lang.str(), schema_of(ckpt), lang.str());
  }
  return loaded;
}

void write_pool(const AdapterPool& pool, const std::filesystem::path& root) {
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + root.string() + ": " + ec.message());
  for (const auto& [lang, ckpt] : pool) {
    const auto dir = root / lang.str();
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    write_checkpoint(ckpt, dir / "adapter.bin");
  }
}

}  // namespace typomerge
