#pragma once

#include <atomic>
#include <cstdint>

namespace beablesim::diagnostics {

// Process-wide counters for numerically benign but noteworthy events.
// They never affect results; tests and callers may inspect or reset them.

struct Counters {
    std::uint64_t renormalizations;     // apply() had to rescale a drifted state
    std::uint64_t zero_amplitude_rows;  // exit rates zeroed because the occupied amplitude vanished
};

namespace detail {
inline std::atomic<std::uint64_t> renormalizations{0};
inline std::atomic<std::uint64_t> zero_amplitude_rows{0};
} // namespace detail

inline void record_renormalization() { detail::renormalizations.fetch_add(1, std::memory_order_relaxed); }
inline void record_zero_amplitude_row() { detail::zero_amplitude_rows.fetch_add(1, std::memory_order_relaxed); }

inline Counters snapshot() {
    return Counters{detail::renormalizations.load(std::memory_order_relaxed),
                    detail::zero_amplitude_rows.load(std::memory_order_relaxed)};
}

inline void reset() {
    detail::renormalizations.store(0, std::memory_order_relaxed);
    detail::zero_amplitude_rows.store(0, std::memory_order_relaxed);
}

} // namespace beablesim::diagnostics
