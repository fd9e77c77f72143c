#pragma once

// Versioned binary container: magic, version, key/value metadata, a layout
// table of named arrays, then the arrays as little-endian 64-bit floats.

#include <map>
#include <string>
#include <vector>

namespace san {

struct Checkpoint {
    std::map<std::string, std::string> meta;
    std::map<std::string, std::vector<double>> arrays;
};

inline constexpr char kCheckpointMagic[8] = {'S', 'A', 'N', 'C', 'K', 'P', 'T', '\0'};
inline constexpr unsigned kCheckpointVersion = 1;

std::string encode_checkpoint(const Checkpoint& c);
// Throws ParseError (byte offset as line) on malformed input.
Checkpoint decode_checkpoint(const std::string& bytes);

// Writes path + ".tmp" and renames it over path.
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Writes text to path via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& text);

}  // namespace san
