#pragma once

namespace spc {

/// Worker count used by the OpenMP kernels. Results never depend on it.
int num_threads();
void set_num_threads(int n);

/// Reads SPC_NUM_THREADS, if set and positive, and applies it.
void apply_thread_env();

}  // namespace spc
