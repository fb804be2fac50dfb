#pragma once

#include <cstdlib>
#include <string>

namespace testdata {

inline std::string data_dir() {
  if (const char* env = std::getenv("STIXNET_DATA_DIR")) return env;
  return STIXNET_DEFAULT_DATA_DIR;
}

inline std::string path(const std::string& rel) { return data_dir() + "/" + rel; }

}  // namespace testdata
