#pragma once

#include <cstddef>
#include <functional>

namespace doilab {

// Worker count used by parallel_for. Defaults to 1.
void set_num_threads(int n);
int num_threads();

// Calls body(i) for i in [0, n). Iterations must not write shared state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace doilab
