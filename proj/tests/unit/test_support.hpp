#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace sqlgov::testing {

inline std::string data_path(const std::string& name) { return std::string(SQLGOV_TEST_DATA) + "/" + name; }

inline std::string read_data(const std::string& name) {
    std::ifstream in(data_path(name), std::ios::binary);
    if (!in) throw std::runtime_error("missing test data " + name);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace sqlgov::testing
