#pragma once

#include "pda/access_control.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace pda {

class PolicyFileError : public std::runtime_error {
public:
    explicit PolicyFileError(const std::string& what) : std::runtime_error(what) {}
};

// TOML-style policy text: top-level owner/revision, one [[grant]] table per
// grant, one [policy."<source>"] table per computation policy. Values are
// strings, integers, booleans, and single-line string arrays; supports #
// comments. parse(render(p)) == p for every valid policy.
std::string policy_to_text(const AccessPolicy& policy);
AccessPolicy policy_from_text(const std::string& text);  // throws PolicyFileError

AccessPolicy load_policy_file(const std::filesystem::path& path);  // throws PolicyFileError
void save_policy_file(const std::filesystem::path& path, const AccessPolicy& policy);

}  // namespace pda
