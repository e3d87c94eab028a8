#pragma once

#include <fstream>
#include <sstream>
#include <string>

inline std::string data_path(const std::string& rel) { return std::string(PROTOFSM_DATA_DIR) + "/" + rel; }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
