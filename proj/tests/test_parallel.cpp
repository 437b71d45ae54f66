#include <atomic>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "med/parallel.hpp"

TEST_CASE("parallel_for visits every index exactly once") {
  for (std::size_t count : {std::size_t{0}, std::size_t{1}, std::size_t{7}, std::size_t{1000}}) {
    for (int threads : {1, 2, 8}) {
      std::vector<int> hits(count, 0);
      med::parallel_for(count, threads, [&](std::size_t i) { ++hits[i]; });
      for (std::size_t i = 0; i < count; ++i) CHECK(hits[i] == 1);
    }
  }
}

TEST_CASE("parallel_for reports the lowest-index failure") {
  for (int threads : {1, 4}) {
    std::atomic<int> completed{0};
    try {
      med::parallel_for(100, threads, [&](std::size_t i) {
        if (i == 3 || i == 57) throw std::runtime_error("boom " + std::to_string(i));
        ++completed;
      });
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "boom 3");
    }
  }
}

TEST_CASE("thread resolution") {
  CHECK(med::resolve_threads(3) == 3);
  CHECK(med::resolve_threads(1) == 1);
  CHECK(med::resolve_threads(0) >= 1);
  CHECK(med::resolve_threads(-2) >= 1);
}
