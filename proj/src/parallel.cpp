#include "hheat/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hheat {

namespace {
std::atomic<int> g_workers{0};
}

void set_workers(int w) { g_workers = std::max(0, w); }

int workers() {
    int w = g_workers.load();
    if (w > 0) return w;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& block) {
    if (count == 0) return;
    std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers()), count);
    if (w <= 1) {
        block(0, count);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex mu;
    std::size_t chunk = (count + w - 1) / w;
    for (std::size_t k = 0; k < w; ++k) {
        std::size_t b = k * chunk, e = std::min(count, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, b, e] {
            try {
                block(b, e);
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace hheat
