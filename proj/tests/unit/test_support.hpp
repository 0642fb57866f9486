#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "props/core/canonical.hpp"

namespace props::testing {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Doc load_config(const std::string& name) {
    return canonical_decode(read_file(std::string(PROPS_SOURCE_DIR) + "/configs/" + name));
}

/// Content of the seeded Example-1 EHR record.
inline Doc ehr_fixture() {
    return load_config("train-ehr.json").at("source").at("records").as_array().at(0).at("content");
}

}  // namespace props::testing
