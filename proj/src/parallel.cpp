// SPDX-License-Identifier: Apache-2.0
#include "dse/parallel.hpp"

#include <thread>

namespace dse {

int default_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace dse
