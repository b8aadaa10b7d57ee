#include "dinn/common.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace dinn {

namespace {
std::atomic<int> g_threads{1};
}

int threads() { return g_threads.load(std::memory_order_relaxed); }

void set_threads(int n) {
    if (n < 1) throw ConfigError("thread count must be >= 1, got " + std::to_string(n));
    g_threads.store(n, std::memory_order_relaxed);
}

int init_threads_from_env() {
    const char* env = std::getenv("DINN_THREADS");
    if (env != nullptr && *env != '\0') {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end == nullptr || *end != '\0' || v < 1 || v > 4096)
            throw ConfigError("DINN_THREADS must be a positive integer, got '" + std::string(env) + "'");
        g_threads.store(static_cast<int>(v), std::memory_order_relaxed);
    } else {
        g_threads.store(1, std::memory_order_relaxed);
    }
    return g_threads.load(std::memory_order_relaxed);
}

}  // namespace dinn
