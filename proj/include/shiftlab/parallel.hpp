#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "shiftlab/io.hpp"

namespace shiftlab {

struct PipelineOptions {
  int threads = 0;              // 0 = hardware concurrency
  size_t batch_lines = 2048;
  size_t max_inflight = 0;      // 0 = threads * 8
};

// Order-preserving parallel line pipeline: batches of input lines are mapped
// on a worker pool and re-serialized in input order, so output bytes do not
// depend on thread count or scheduling. Accumulators merge in batch order.
//
// MapFn: void(uint64_t first_line_no, const std::vector<std::string>& lines,
//             std::string& out_buf, Acc& local)
// Acc:   default-constructible, with void merge(Acc&&).
//
// Returns the number of input lines consumed.
template <typename MapFn, typename Acc>
uint64_t process_lines_ordered(std::istream& in, std::ostream& out, MapFn map_batch,
                               Acc& acc, PipelineOptions opt = {}) {
  int threads = opt.threads > 0 ? opt.threads
                                : static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  size_t max_inflight = opt.max_inflight ? opt.max_inflight
                                         : static_cast<size_t>(threads) * 8;
  size_t batch_lines = opt.batch_lines ? opt.batch_lines : 1;

  struct Task {
    uint64_t seq = 0;
    uint64_t first_line = 0;
    std::vector<std::string> lines;
  };
  struct Done {
    std::string out;
    Acc local;
  };

  std::mutex mu;
  std::condition_variable cv_task, cv_done, cv_space;
  std::deque<Task> tasks;
  std::map<uint64_t, Done> done;
  bool eof = false;
  uint64_t issued = 0, written = 0, inflight = 0;
  std::exception_ptr failure;

  auto failed = [&] { return static_cast<bool>(failure); };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        Task task;
        {
          std::unique_lock lock(mu);
          cv_task.wait(lock, [&] { return !tasks.empty() || eof || failed(); });
          if (failed() || (tasks.empty() && eof)) return;
          task = std::move(tasks.front());
          tasks.pop_front();
        }
        Done d;
        try {
          map_batch(task.first_line, task.lines, d.out, d.local);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
          cv_task.notify_all();
          cv_done.notify_all();
          cv_space.notify_all();
          return;
        }
        {
          std::lock_guard lock(mu);
          done.emplace(task.seq, std::move(d));
          cv_done.notify_one();
        }
      }
    });
  }

  std::thread writer([&] {
    for (;;) {
      Done d;
      {
        std::unique_lock lock(mu);
        cv_done.wait(lock, [&] {
          return failed() || done.count(written) != 0 || (eof && written == issued);
        });
        if (failed() || (eof && written == issued && done.count(written) == 0)) return;
        auto it = done.find(written);
        d = std::move(it->second);
        done.erase(it);
      }
      out.write(d.out.data(), static_cast<std::streamsize>(d.out.size()));
      acc.merge(std::move(d.local));
      {
        std::lock_guard lock(mu);
        ++written;
        --inflight;
        cv_space.notify_one();
        cv_done.notify_one();
      }
    }
  });

  uint64_t line_no = 0;
  {
    std::string line;
    std::vector<std::string> batch;
    batch.reserve(batch_lines);
    uint64_t batch_first = 1;
    auto flush = [&] {
      if (batch.empty()) return;
      std::unique_lock lock(mu);
      cv_space.wait(lock, [&] { return inflight < max_inflight || failed(); });
      if (failed()) return;
      tasks.push_back(Task{issued, batch_first, std::move(batch)});
      ++issued;
      ++inflight;
      cv_task.notify_one();
      batch = {};
      batch.reserve(batch_lines);
    };
    while (read_line(in, line)) {
      ++line_no;
      if (batch.empty()) batch_first = line_no;
      batch.push_back(std::move(line));
      if (batch.size() >= batch_lines) {
        flush();
        if (failed()) break;
      }
    }
    flush();
  }
  {
    std::lock_guard lock(mu);
    eof = true;
    cv_task.notify_all();
    cv_done.notify_all();
  }

  for (std::thread& t : pool) t.join();
  cv_done.notify_all();
  writer.join();

  if (failure) std::rethrow_exception(failure);
  return line_no;
}

}  // namespace shiftlab
