#pragma once

#include <vector>

#include "beablesim/hilbert.hpp"

namespace beablesim {

/// One piecewise-constant drive interval.
struct Segment {
    double duration;          // strictly positive, finite
    HermitianOperator hamiltonian;

    Segment(double duration, HermitianOperator hamiltonian);
};

/// Ordered list of segments of uniform dimension. Segment intervals are
/// half-open [start, end): a boundary instant belongs to the later segment.
class Schedule {
public:
    explicit Schedule(std::vector<Segment> segments);

    /// Zero-duration schedule; total_unitary is the identity.
    static Schedule trivial(int dim);

    int dim() const { return dim_; }
    bool empty() const { return segments_.empty(); }
    const std::vector<Segment>& segments() const { return segments_; }
    double total_duration() const;

    /// Start time of segment k (sum of previous durations).
    double segment_start(int k) const;

    /// Schedule consisting of this schedule followed by `later`.
    Schedule then(const Schedule& later) const;

private:
    Schedule(int dim, std::vector<Segment> segments) : dim_(dim), segments_(std::move(segments)) {}

    int dim_;
    std::vector<Segment> segments_;
};

/// Hamiltonian in force at time t, 0 <= t < total_duration.
const HermitianOperator& hamiltonian_at(const Schedule& s, double t);

/// Time-ordered product of the per-segment exponentials; later segments
/// multiply on the left.
UnitaryOperator total_unitary(const Schedule& s);

/// Composed unitary from time 0 through the end of segment `last_segment`
/// (exclusive upper index: prefix_unitary(s, 0) is the identity).
UnitaryOperator prefix_unitary(const Schedule& s, int segment_count);

} // namespace beablesim
