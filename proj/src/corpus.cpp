#include "avifind/corpus.hpp"

#include "avifind/error.hpp"
#include "avifind/rng.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace avifind {

namespace {

bool is_image_file(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

CorpusManifest scan_corpus(const std::filesystem::path& root,
                           std::optional<int> per_class_limit, std::uint64_t seed) {
    namespace fs = std::filesystem;
    if (per_class_limit && *per_class_limit < 1)
        throw std::invalid_argument("per_class_limit must be >= 1");
    if (!fs::exists(root))
        throw IoError("corpus root does not exist: " + root.string());
    if (!fs::is_directory(root))
        throw IoError("corpus root is not a directory: " + root.string());

    // CUB checkouts keep classes under images/.
    fs::path dir = root;
    if (fs::is_directory(root / "images")) dir = root / "images";

    // class -> (filename, path), filenames later sorted lexicographically
    std::map<std::string, std::vector<std::pair<std::string, fs::path>>> classes;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory()) {
            const std::string label = entry.path().filename().string();
            for (const auto& file : fs::directory_iterator(entry.path()))
                if (file.is_regular_file() && is_image_file(file.path()))
                    classes[label].emplace_back(file.path().filename().string(),
                                                file.path());
            classes.try_emplace(label);  // record even if empty, to warn below
        } else if (entry.is_regular_file() && is_image_file(entry.path())) {
            // flat "<class>__<file>" naming
            const std::string name = entry.path().filename().string();
            const std::size_t sep = name.find("__");
            if (sep != std::string::npos && sep > 0 && sep + 2 < name.size())
                classes[name.substr(0, sep)].emplace_back(name.substr(sep + 2),
                                                          entry.path());
        }
    }

    CorpusManifest manifest;
    manifest.root = root;
    for (auto& [label, files] : classes) {
        if (files.empty()) {
            manifest.warnings.push_back("skipping empty class directory: " + label);
            continue;
        }
        std::sort(files.begin(), files.end());
        if (per_class_limit &&
            files.size() > static_cast<std::size_t>(*per_class_limit)) {
            // Per-class generator keyed by the class name, so one class's
            // selection does not depend on which other classes exist.
            std::mt19937_64 gen(seed ^ fnv1a64(label.data(), label.size()));
            deterministic_shuffle(files, gen);
            files.resize(static_cast<std::size_t>(*per_class_limit));
            std::sort(files.begin(), files.end());
        }
        for (auto& [name, path] : files)
            manifest.entries.push_back({label + "/" + name, label, path});
    }

    if (manifest.entries.empty())
        throw IoError("no class directories with images found under " + root.string());
    return manifest;
}

}  // namespace avifind
