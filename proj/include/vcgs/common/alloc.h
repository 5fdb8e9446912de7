#pragma once

namespace vcgs {

/// Raises glibc's mmap and trim thresholds so the many short-lived matrices
/// of a training step are recycled from the heap instead of being mapped and
/// unmapped each time. No-op on other C libraries.
void configure_allocator();

}  // namespace vcgs
