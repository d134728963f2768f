#pragma once

#include <functional>

namespace retex {

// Global worker cap. 0 means "use the hardware count". The CLI sets this
// from --threads; tests may pin it to compare single vs multi threaded runs.
void set_thread_cap(int n);
int thread_cap();
int effective_threads();

// Runs body(chunk_begin, chunk_end) over a partition of [begin, end) into
// contiguous chunks, one per worker. Bodies must write disjoint outputs;
// under that contract results are identical for any thread count.
void parallel_chunks(int begin, int end, const std::function<void(int, int)>& body);

// Convenience: body(i) for each i in [begin, end), chunked by rows.
void parallel_for(int begin, int end, const std::function<void(int)>& body);

} // namespace retex
