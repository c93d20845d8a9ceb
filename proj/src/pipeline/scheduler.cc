#include <chrono>

#include "attrib/error.h"
#include "attrib/parallel.h"
#include "attrib/pipeline.h"

namespace attrib {

std::vector<TaskTiming> Schedule(std::size_t n_tasks, int workers,
                                 const std::function<void(std::size_t)>& fn) {
  if (workers < 1) throw ValidationError("workers must be at least 1");
  using Clock = std::chrono::steady_clock;
  std::vector<TaskTiming> timings(n_tasks);
  const auto origin = Clock::now();
  ParallelFor(n_tasks, workers, [&](std::size_t i) {
    const auto start = Clock::now();
    try {
      fn(i);
    } catch (const std::exception& e) {
      timings[i].ok = false;
      timings[i].error = e.what();
    } catch (...) {
      timings[i].ok = false;
      timings[i].error = "unknown error";
    }
    const auto end = Clock::now();
    timings[i].start = std::chrono::duration<double>(start - origin).count();
    timings[i].seconds = std::chrono::duration<double>(end - start).count();
  });
  return timings;
}

}  // namespace attrib
