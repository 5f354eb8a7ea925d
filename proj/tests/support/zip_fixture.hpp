#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "planchat/archive.hpp"
#include "support/fixtures.hpp"

namespace planchat::testing {

/// The CSV files of a fixture, keyed "name/file.csv".
inline std::map<std::string, std::string> fixture_files(const std::string& name) {
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::directory_iterator(fixture_dir(name))) {
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        files[name + "/" + e.path().filename().string()] = ss.str();
    }
    return files;
}

inline std::string fixture_zip(const std::string& name) { return archive::write_zip(fixture_files(name)); }

}  // namespace planchat::testing
