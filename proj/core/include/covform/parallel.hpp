#pragma once

#include <cstddef>
#include <functional>

namespace covform {

// Worker count for grid loops. Read once from COVFORM_THREADS, default is
// the hardware concurrency.
int thread_count();
void set_thread_count(int n);

// Splits [0, n) into contiguous chunks. Each index is visited exactly once and
// the body must only write to slots owned by its chunk. Calls made from inside
// a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

// Marks the calling thread as a worker so nested parallel_for calls stay serial.
class SerialScope {
 public:
  SerialScope();
  ~SerialScope();
  SerialScope(const SerialScope&) = delete;
  SerialScope& operator=(const SerialScope&) = delete;

 private:
  bool previous_;
};

}  // namespace covform
