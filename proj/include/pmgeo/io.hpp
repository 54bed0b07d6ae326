#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pmgeo/model.hpp"
#include "pmgeo/sample_set.hpp"

namespace pmgeo {

/// Binary SampleSet layout, all integers and floats little-endian:
///
///   "PMGSAMPL"            8 bytes
///   version               u32 (= 1)
///   N, D                  u64, u64
///   seed                  u64
///   label                 i64
///   attempts, successes   u64, u64
///   source length, bytes  u32, UTF-8
///   points                N*D f64, row-major
///   crc32                 u32 over every preceding byte
inline constexpr std::uint32_t kSampleSetVersion = 1;

/// Model checkpoint layout:
///
///   "PMGMODEL"            8 bytes
///   version               u32 (= 1)
///   activation            u32 (0 tanh, 1 softplus, 2 relu)
///   seed                  u64
///   n_dims                u32, then n_dims x u64 layer widths
///   per layer             weights (row-major f64), then biases (f64)
///   crc32                 u32
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_sample_set(const SampleSet& s);
/// Throws IntegrityError for a bad magic, truncation, trailing bytes or a
/// checksum mismatch, UnsupportedVersion for another version. Nothing is
/// returned on failure.
SampleSet decode_sample_set(const std::string& bytes);

void write_sample_set(const std::filesystem::path& path, const SampleSet& s);
SampleSet read_sample_set(const std::filesystem::path& path);

std::string encode_model(const MlpModel& m);
MlpModel decode_model(const std::string& bytes);
void write_model(const std::filesystem::path& path, const MlpModel& m);
MlpModel read_model(const std::filesystem::path& path);

/// CSV form: one "# key=value" line per metadata field, then one row per
/// point with shortest round-trip decimal values.
void write_sample_set_csv(const std::filesystem::path& path, const SampleSet& s);
SampleSet read_sample_set_csv(const std::filesystem::path& path);

/// Raw file contents; InvalidInput naming the path if it cannot be read.
std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename.
void write_file(const std::filesystem::path& path, const std::string& bytes);

std::uint32_t crc32(const std::string& bytes);
std::string format_double(double v);

}  // namespace pmgeo
