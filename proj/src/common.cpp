#include "dgsmlab/common.hpp"

#include <cstdlib>
#include <mutex>

#ifndef DGSMLAB_DEFAULT_DATA_DIR
#define DGSMLAB_DEFAULT_DATA_DIR "data"
#endif

namespace dgsmlab {

namespace {
std::mutex g_data_dir_mutex;
std::string g_data_dir_override;
}  // namespace

std::string data_dir() {
  {
    std::lock_guard lock(g_data_dir_mutex);
    if (!g_data_dir_override.empty()) return g_data_dir_override;
  }
  if (const char* env = std::getenv("DGSMLAB_DATA_DIR"); env && *env) return env;
  return DGSMLAB_DEFAULT_DATA_DIR;
}

void set_data_dir(std::string dir) {
  std::lock_guard lock(g_data_dir_mutex);
  g_data_dir_override = std::move(dir);
}

}  // namespace dgsmlab
