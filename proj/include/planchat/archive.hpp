#pragma once

#include <map>
#include <stdexcept>
#include <string>

namespace planchat::archive {

class ArchiveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Regular files of a zip archive keyed by their stored path. Handles the
/// stored and deflate methods, which covers what common zip tools produce.
std::map<std::string, std::string> read_zip(const std::string& bytes);

/// Uncompressed (stored) zip of `files`.
std::string write_zip(const std::map<std::string, std::string>& files);

}  // namespace planchat::archive
