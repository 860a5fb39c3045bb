#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace avifind {

struct ManifestEntry {
    std::string image_id;  // "<class>/<filename>"
    std::string label;
    std::filesystem::path path;
};

struct CorpusManifest {
    std::filesystem::path root;
    std::vector<ManifestEntry> entries;
    std::vector<std::string> warnings;  // e.g. skipped empty class directories
};

// Scans a class-per-directory corpus (CUB layout `images/<class>/<file>` or
// plain `<class>/<file>`; flat `<class>__<file>` names also accepted).
// Classes and files are visited lexicographically. With per_class_limit set,
// each class keeps the first `limit` files of a seeded shuffle.
CorpusManifest scan_corpus(const std::filesystem::path& root,
                           std::optional<int> per_class_limit, std::uint64_t seed);

}  // namespace avifind
