#pragma once

#include <cstdio>
#include <string>

namespace uavsplit {

/// Round-trip formatting so repeated runs produce byte-identical files.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace uavsplit
