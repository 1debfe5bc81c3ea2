#pragma once

#include <string>

namespace rcvr {

// Whole-file helpers; both throw Error(IoError) naming the path.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace rcvr
