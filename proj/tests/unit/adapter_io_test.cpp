#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include <sys/stat.h>
#include <unistd.h>

#include "test_support.hpp"
#include "typomerge/adapter_io.hpp"
#include "typomerge/digest.hpp"
#include "typomerge/error.hpp"

using namespace typomerge;
using typomerge::testing::checkpoint;
using typomerge::testing::scalar_checkpoint;
using typomerge::testing::save;
using typomerge::testing::TempDir;

namespace {

std::string container(const std::string& header, const std::string& payload) {
  std::string out(8, '\0');
  const std::uint64_t n = header.size();
  std::memcpy(out.data(), &n, 8);
  return out + header + payload;
}

ErrorCode parse_error(std::string_view bytes, const ReadOptions& opts = {}) {
  try {
    parse_container(bytes, opts);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

std::string f32_bytes(std::initializer_list<float> values) {
  std::string out;
  for (float v : values) out.append(reinterpret_cast<const char*>(&v), 4);
  return out;
}

}  // namespace

TEST(Container, RoundTripIsExact) {
  TempDir dir;
  auto c = checkpoint("de", {{"b", Tensor{{2}, {-0.0f, 1e-40f}}}, {"a", Tensor{{2, 3}, {1, 2, 3, 4, 5, 6}}}});
  c.manifest.layer_count = 12;
  c.manifest.provenance = {{"origin", "unit"}};
  write_checkpoint(c, dir / "adapter.bin");
  const auto back = read_checkpoint(dir / "adapter.bin");
  EXPECT_EQ(back.manifest, c.manifest);
  for (const auto& [name, t] : c.tensors) {
    const auto& u = back.tensors.at(name);
    EXPECT_EQ(u.shape, t.shape);
    EXPECT_EQ(std::memcmp(u.data.data(), t.data.data(), t.data.size() * 4), 0);
  }
}

TEST(Container, LayoutIsSafetensorsCompatible) {
  const auto c = scalar_checkpoint("de", {1.0f, 2.0f});
  const auto bytes = serialize_container(c);
  std::uint64_t n = 0;
  std::memcpy(&n, bytes.data(), 8);
  EXPECT_EQ((8 + n) % 8, 0u);
  const auto header = nlohmann::json::parse(bytes.substr(8, n));
  EXPECT_EQ(header["w"]["dtype"], "F32");
  EXPECT_EQ(header["w"]["shape"], nlohmann::json::array({2}));
  EXPECT_EQ(header["w"]["data_offsets"], nlohmann::json::array({0, 8}));
  EXPECT_EQ(bytes.size(), 8 + n + 8);
  EXPECT_EQ(bytes.substr(8 + n), f32_bytes({1.0f, 2.0f}));
}

TEST(Container, TensorOrderIsLexicographic) {
  const auto c = checkpoint("de", {{"zeta", Tensor{{1}, {1}}}, {"alpha", Tensor{{1}, {2}}}});
  const auto bytes = serialize_container(c);
  EXPECT_EQ(bytes.substr(bytes.size() - 8), f32_bytes({2.0f, 1.0f}));
}

TEST(Container, EmptyCheckpoint) {
  const auto bytes = serialize_container(AdapterCheckpoint{});
  EXPECT_TRUE(parse_container(bytes).tensors.empty());
}

TEST(Container, DeterministicBytes) {
  TempDir dir;
  const auto c = scalar_checkpoint("de", {0.1f, 0.2f, 0.3f});
  write_checkpoint(c, dir / "a.bin");
  const auto first = sha256_file(dir / "a.bin");
  write_checkpoint(c, dir / "a.bin");
  EXPECT_EQ(sha256_file(dir / "a.bin"), first);
  EXPECT_EQ(first, sha256_hex(serialize_container(c)));
}

TEST(Container, OffsetsPastEofAreMalformed) {
  EXPECT_EQ(parse_error(container(R"({"w":{"dtype":"F32","shape":[2],"data_offsets":[0,8]}})", f32_bytes({1.0f}))),
            ErrorCode::MalformedContainer);
}

TEST(Container, StructuralViolations) {
  const auto two = f32_bytes({1.0f, 2.0f});
  EXPECT_EQ(parse_error("short"), ErrorCode::MalformedContainer);
  EXPECT_EQ(parse_error(container("{not json", two)), ErrorCode::MalformedContainer);
  EXPECT_EQ(parse_error(container("[]", "")), ErrorCode::MalformedContainer);
  // Overlapping tensors.
  EXPECT_EQ(parse_error(container(R"({"a":{"dtype":"F32","shape":[2],"data_offsets":[0,8]},)"
                                  R"("b":{"dtype":"F32","shape":[1],"data_offsets":[4,8]}})",
                                  two)),
            ErrorCode::MalformedContainer);
  // Trailing bytes.
  EXPECT_EQ(parse_error(container(R"({"a":{"dtype":"F32","shape":[1],"data_offsets":[0,4]}})", two)),
            ErrorCode::MalformedContainer);
  // Gap.
  EXPECT_EQ(parse_error(container(R"({"a":{"dtype":"F32","shape":[1],"data_offsets":[4,8]}})", two)),
            ErrorCode::MalformedContainer);
  // Shape and offsets disagree.
  EXPECT_EQ(parse_error(container(R"({"a":{"dtype":"F32","shape":[3],"data_offsets":[0,8]}})", two)),
            ErrorCode::MalformedContainer);
  // Zero dimension, negative offset, missing keys.
  EXPECT_EQ(parse_error(container(R"({"a":{"dtype":"F32","shape":[0],"data_offsets":[0,0]}})", "")),
            ErrorCode::MalformedContainer);
  EXPECT_EQ(parse_error(container(R"({"a":{"dtype":"F32","shape":[1],"data_offsets":[-4,0]}})", "")),
            ErrorCode::MalformedContainer);
  EXPECT_EQ(parse_error(container(R"({"a":{"dtype":"F32","shape":[1]}})", "")), ErrorCode::MalformedContainer);
  // Header length beyond the file.
  std::string huge(8, '\xff');
  EXPECT_EQ(parse_error(huge + "{}"), ErrorCode::MalformedContainer);
}

TEST(Container, MetadataEntryIsIgnored) {
  const auto bytes = container(R"({"__metadata__":{"format":"pt"},"w":{"dtype":"F32","shape":[1],"data_offsets":[0,4]}})",
                               f32_bytes({5.0f}));
  const auto c = parse_container(bytes);
  EXPECT_EQ(c.tensors.size(), 1u);
  EXPECT_EQ(c.tensors.at("w").data[0], 5.0f);
}

TEST(Container, HalfPrecisionNeedsCastFlag) {
  // F16 0x3C00 = 1.0, 0xC000 = -2.0, 0x0001 = 2^-24 (subnormal).
  std::string payload("\x00\x3c\x00\xc0\x01\x00\x00\x00", 8);
  const auto bytes = container(R"({"h":{"dtype":"F16","shape":[4],"data_offsets":[0,8]}})", payload);
  EXPECT_EQ(parse_error(bytes), ErrorCode::UnsupportedDtype);
  ReadOptions cast;
  cast.cast_f32 = true;
  const auto c = parse_container(bytes, cast);
  EXPECT_EQ(c.tensors.at("h").data, (std::vector<float>{1.0f, -2.0f, 0x1p-24f, 0.0f}));
}

TEST(Container, Bf16UpCastIsExact) {
  // BF16 0x3FC0 = 1.5, 0xC120 = -10.0.
  std::string payload("\xc0\x3f\x20\xc1", 4);
  const auto bytes = container(R"({"b":{"dtype":"BF16","shape":[2],"data_offsets":[0,4]}})", payload);
  ReadOptions cast;
  cast.cast_f32 = true;
  EXPECT_EQ(parse_container(bytes, cast).tensors.at("b").data, (std::vector<float>{1.5f, -10.0f}));
}

TEST(Container, OtherDtypesUnsupported) {
  EXPECT_EQ(parse_error(container(R"({"a":{"dtype":"F64","shape":[1],"data_offsets":[0,8]}})", std::string(8, '\0'))),
            ErrorCode::UnsupportedDtype);
}

TEST(Container, NonfiniteNeedsFlag) {
  const float inf = std::numeric_limits<float>::infinity();
  const auto bytes = serialize_container(scalar_checkpoint("de", {inf}));
  EXPECT_EQ(parse_error(bytes), ErrorCode::NonfiniteInput);
  ReadOptions allow;
  allow.allow_nonfinite = true;
  EXPECT_EQ(parse_container(bytes, allow).tensors.at("w").data[0], inf);
}

TEST(ReadCheckpoint, SynthesizesManifestWithoutSidecar) {
  TempDir dir;
  write_file_atomic(dir / "x.bin", serialize_container(scalar_checkpoint("de", {1.0f})));
  ReadOptions opts;
  opts.language_hint = "de";
  const auto c = read_checkpoint(dir / "x.bin", opts);
  EXPECT_EQ(c.manifest.language, "de");
  EXPECT_EQ(c.manifest.architecture, "unknown");
  EXPECT_EQ(read_checkpoint(dir / "x.bin").manifest.language, "und");
}

TEST(ReadCheckpoint, MissingFileIsIoError) {
  try {
    read_checkpoint("/nonexistent/adapter.bin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(WriteCheckpoint, ReadOnlyDirectoryIsIoError) {
  if (::geteuid() == 0) GTEST_SKIP() << "root ignores directory permissions";
  TempDir dir;
  std::filesystem::create_directories(dir / "ro");
  ::chmod((dir / "ro").c_str(), 0555);
  try {
    write_checkpoint(scalar_checkpoint("de", {1.0f}), dir / "ro" / "adapter.bin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
  ::chmod((dir / "ro").c_str(), 0755);
}

TEST(WriteCheckpoint, MissingParentIsIoError) {
  TempDir dir;
  try {
    write_checkpoint(scalar_checkpoint("de", {1.0f}), dir / "nope" / "deeper" / "adapter.bin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(SidecarPath, ReplacesExtension) {
  EXPECT_EQ(sidecar_path("pool/de/adapter.bin"), std::filesystem::path("pool/de/adapter.json"));
  EXPECT_EQ(sidecar_path("pool/de.bin"), std::filesystem::path("pool/de.json"));
}

TEST(Pool, DirectoryLayoutLoadsLexicographically) {
  TempDir dir;
  save(scalar_checkpoint("fr", {2.0f}), dir / "fr" / "adapter.bin");
  save(scalar_checkpoint("de", {1.0f}), dir / "de" / "adapter.bin");
  const auto pool = load_pool(dir.path());
  ASSERT_EQ(pool.adapters.size(), 2u);
  EXPECT_EQ(pool.adapters.begin()->first, LanguageId("de"));
  EXPECT_EQ(std::next(pool.adapters.begin())->first, LanguageId("fr"));
  EXPECT_FALSE(pool.descriptor.english.has_value());
  EXPECT_TRUE(pool.descriptor.members.at(LanguageId("de")).manifest_path.has_value());
}

TEST(Pool, FlatLayoutAndEnglishFlag) {
  TempDir dir;
  save(scalar_checkpoint("en", {1.0f}), dir / "en.bin");
  write_file_atomic(dir / "sw.bin", serialize_container(scalar_checkpoint("sw", {3.0f})));
  write_file_atomic(dir / "README.txt", "not an adapter");
  const auto pool = load_pool(dir.path());
  EXPECT_EQ(pool.adapters.size(), 2u);
  EXPECT_EQ(pool.descriptor.english, LanguageId("en"));
  EXPECT_EQ(pool.adapters.at(LanguageId("sw")).manifest.language, "sw");
  EXPECT_FALSE(pool.descriptor.members.at(LanguageId("sw")).manifest_path.has_value());
}

TEST(Pool, SchemaMismatchNamesLanguagesAndTensor) {
  TempDir dir;
  save(scalar_checkpoint("de", {1.0f}), dir / "de" / "adapter.bin");
  save(scalar_checkpoint("fr", {1.0f, 2.0f}), dir / "fr" / "adapter.bin");
  try {
    load_pool(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("de"), std::string::npos);
    EXPECT_NE(msg.find("fr"), std::string::npos);
    EXPECT_NE(msg.find("'w'"), std::string::npos);
  }
}

TEST(Pool, EmptyDuplicateAndMissing) {
  TempDir dir;
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code([&] { load_pool(dir.path()); }), ErrorCode::EmptyPool);
  save(scalar_checkpoint("de", {1.0f}), dir / "de" / "adapter.bin");
  save(scalar_checkpoint("de", {1.0f}), dir / "de.bin");
  EXPECT_EQ(code([&] { load_pool(dir.path()); }), ErrorCode::DuplicateLanguage);
  EXPECT_EQ(code([&] { load_pool(dir / "missing"); }), ErrorCode::IoError);
}

TEST(Pool, ManifestLanguageMustMatchDirectory) {
  TempDir dir;
  save(scalar_checkpoint("fr", {1.0f}), dir / "de" / "adapter.bin");
  try {
    load_pool(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedFile);
  }
}

TEST(Pool, WritePoolRoundTrips) {
  TempDir dir;
  AdapterPool pool{{LanguageId("de"), scalar_checkpoint("de", {1.0f})},
                   {LanguageId("eng"), scalar_checkpoint("eng", {2.0f})}};
  write_pool(pool, dir / "pool");
  const auto back = load_pool(dir / "pool");
  EXPECT_EQ(back.adapters, pool);
  EXPECT_EQ(back.descriptor.english, LanguageId("eng"));
}

TEST(Digest, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
