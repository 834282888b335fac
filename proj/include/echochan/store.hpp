#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "echochan/dataset.hpp"
#include "echochan/readout.hpp"
#include "echochan/reservoir.hpp"

namespace echochan {

// Binary containers. Byte layouts are documented in docs/FORMATS.md; every
// multi-byte field is little-endian regardless of host.

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr std::uint32_t kDatasetFormatVersion = 1;
inline constexpr std::size_t kModelHeaderBytes = 160;
inline constexpr std::size_t kDatasetHeaderBytes = 544;
inline constexpr std::size_t kMaxStoredTaps = 16;

std::string tool_version();

struct Provenance {
  std::uint64_t master_seed = 0;
  std::uint64_t dataset_fingerprint = 0;
  std::string tool_version;  // at most 31 bytes are stored

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct ModelArtifact {
  Reservoir reservoir;
  ReadoutModel readout;
  Provenance provenance;
};

std::vector<std::uint8_t> encode_model(const ModelArtifact& artifact);
ModelArtifact decode_model(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> encode_dataset(const SequenceDataset& ds);
SequenceDataset decode_dataset(const std::vector<std::uint8_t>& bytes);

/// Writes to a temporary sibling file and renames it over `path`.
void save_model(const ModelArtifact& artifact, const std::filesystem::path& path);
ModelArtifact load_model(const std::filesystem::path& path);

void save_dataset(const SequenceDataset& ds, const std::filesystem::path& path);
SequenceDataset load_dataset(const std::filesystem::path& path);

/// One sequence as CSV with header t,i_tx,q_tx,i_rx,q_rx (requires K = L = 2).
void write_sequence_csv(std::ostream& os, const SequenceDataset& ds, std::size_t index);

/// One CSV file per sequence: <dir>/<stem>_<index>.csv. Returns the paths.
std::vector<std::filesystem::path> export_dataset_csv(const SequenceDataset& ds,
                                                      const std::filesystem::path& dir,
                                                      const std::string& stem);

/// Atomic whole-file write (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace echochan
