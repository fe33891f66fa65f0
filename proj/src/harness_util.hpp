#pragma once

#include <omp.h>

#include <cstddef>
#include <cstdint>
#include <exception>
#include <vector>

#include "promissing/corrupt.hpp"
#include "promissing/results.hpp"

namespace promissing::detail {

// Seed for one (mechanism, fraction) cell of a repetition. Depends on the
// values, not on their position in the config lists.
std::uint64_t cell_seed(std::uint64_t rep_seed, Mechanism m, double fraction, std::uint64_t extra);

// Runs independent jobs across OpenMP threads and returns their tables in
// job order. The first exception (by job index) is rethrown after the loop.
template <class F>
std::vector<ResultTable> run_jobs(std::size_t count, std::size_t threads, F&& job) {
  std::vector<ResultTable> out(count);
  std::vector<std::exception_ptr> errors(count);
  const int nt = threads > 0 ? static_cast<int>(threads) : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(count); ++j) {
    try {
      out[j] = job(static_cast<std::size_t>(j));
    } catch (...) {
      errors[j] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace promissing::detail
