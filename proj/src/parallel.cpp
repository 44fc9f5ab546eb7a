#include "plurikit/parallel.hpp"

#include <atomic>

namespace plurikit {

namespace {
std::atomic<int> g_workers{1};
}

void set_workers(int workers) { g_workers.store(std::max(1, workers)); }

int workers() { return g_workers.load(); }

}  // namespace plurikit
