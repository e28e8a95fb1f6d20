#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sqg/field.hpp"

namespace sqg {

/// KRN1 field dump: one ASCII header line "KRN1 <nt> <nx> <ny> <mu>\n"
/// followed by little-endian 64-bit floats, row-major (t, then y, then x).
void write_krn1(const std::string& path, const std::vector<PeriodicField>& slices, double mu);

struct Krn1Data {
    std::size_t nt = 0, nx = 0, ny = 0;
    double mu = 0.0;
    std::vector<double> data; // t-major, then y, then x
};
Krn1Data read_krn1(const std::string& path);

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);
std::string sha256_file(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// CSV with a header row; cells already formatted.
void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows);

/// Sectioned key=value configuration: "[section]" lines open sections, "#"
/// starts a comment. Keys are stored as "section.key".
std::map<std::string, std::string> parse_config_text(const std::string& text);

/// Reproducibility record: every command writes one of these next to its
/// artifacts; re-running from it must reproduce the checksums bit-identically.
struct Manifest {
    std::string command;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> config; // normalized key -> value
    std::map<std::string, std::string> artifacts; // file name -> sha256
    std::string config_hash() const;
};

void write_manifest(const std::string& dir, const Manifest& m);
Manifest read_manifest(const std::string& path);

struct ManifestCheck {
    bool ok = true;
    std::vector<std::string> missing;
    std::vector<std::string> mismatched;
};
/// Recomputes artifact hashes in the manifest's directory.
ManifestCheck verify_manifest(const std::string& dir);

/// Diff of two manifests' configurations (key: old -> new), for mismatch reports.
std::vector<std::string> manifest_config_diff(const Manifest& a, const Manifest& b);

} // namespace sqg
