#include "covform/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace covform {
namespace {

std::atomic<int> g_threads{0};
thread_local bool t_inside_worker = false;

int threads_from_env() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  const char* env = std::getenv("COVFORM_THREADS");
  if (env == nullptr || *env == '\0') return hw;
  try {
    int v = std::stoi(env);
    return v >= 1 ? v : 1;
  } catch (...) {
    return hw;
  }
}

}  // namespace

int thread_count() {
  int n = g_threads.load();
  if (n == 0) {
    n = threads_from_env();
    g_threads.store(n);
  }
  return n;
}

void set_thread_count(int n) { g_threads.store(n < 1 ? 1 : n); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  const int workers = t_inside_worker ? 1 : thread_count();
  // small loops are not worth a thread spawn
  if (workers <= 1 || n < 2048) {
    body(0, n);
    return;
  }
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  const std::size_t chunk = (n + w - 1) / w;
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] {
      t_inside_worker = true;
      body(begin, end);
    });
  }
  for (auto& th : pool) th.join();
}

SerialScope::SerialScope() : previous_(t_inside_worker) { t_inside_worker = true; }
SerialScope::~SerialScope() { t_inside_worker = previous_; }

}  // namespace covform
