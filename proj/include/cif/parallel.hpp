#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace cif {

/// Number of worker threads to use when the caller asks for 0 ("auto").
unsigned default_threads();

/// Runs body(i) for i in [0, count) on up to `threads` workers. Work items
/// must write only to their own slot; if any throw, the exception from the
/// lowest index is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// SplitMix64 finalizer over (master, stream, substream): independent,
/// order-free seeds for replication workers.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t substream = 0);

}  // namespace cif
