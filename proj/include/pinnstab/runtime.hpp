#pragma once

namespace pinnstab {

/// Keeps large per-step buffers mapped between training steps. No-op off glibc.
void configure_allocator();

}  // namespace pinnstab
