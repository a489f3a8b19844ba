#include "beablesim/schedule.hpp"

#include <cmath>
#include <string>

namespace beablesim {

Segment::Segment(double duration_, HermitianOperator hamiltonian_)
    : duration(duration_), hamiltonian(std::move(hamiltonian_)) {
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw InvariantError("Segment: duration must be strictly positive and finite");
    }
}

Schedule::Schedule(std::vector<Segment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) {
        throw InvariantError("Schedule: empty segment list (use Schedule::trivial for a no-op schedule)");
    }
    dim_ = segments_.front().hamiltonian.dim();
    for (const Segment& seg : segments_) {
        if (seg.hamiltonian.dim() != dim_) {
            throw DimensionError("Schedule: segments have mixed dimensions");
        }
    }
}

Schedule Schedule::trivial(int dim) {
    if (dim <= 0) {
        throw DimensionError("Schedule::trivial: dimension must be positive");
    }
    return Schedule(dim, {});
}

double Schedule::total_duration() const {
    double total = 0.0;
    for (const Segment& seg : segments_) total += seg.duration;
    return total;
}

double Schedule::segment_start(int k) const {
    double t = 0.0;
    for (int i = 0; i < k; ++i) t += segments_[static_cast<std::size_t>(i)].duration;
    return t;
}

Schedule Schedule::then(const Schedule& later) const {
    if (later.dim() != dim_) {
        throw DimensionError("Schedule::then: dimension mismatch");
    }
    std::vector<Segment> merged = segments_;
    merged.insert(merged.end(), later.segments_.begin(), later.segments_.end());
    if (merged.empty()) {
        return Schedule::trivial(dim_);
    }
    return Schedule(std::move(merged));
}

const HermitianOperator& hamiltonian_at(const Schedule& s, double t) {
    const double total = s.total_duration();
    if (!(t >= 0.0) || !(t < total)) {
        throw Error("hamiltonian_at: t = " + std::to_string(t) + " outside [0, " +
                    std::to_string(total) + ")");
    }
    double end = 0.0;
    for (const Segment& seg : s.segments()) {
        end += seg.duration;
        if (t < end) return seg.hamiltonian;
    }
    // Roundoff in the partial sums can leave t just below `total` but not below
    // any accumulated end; the last segment owns it.
    return s.segments().back().hamiltonian;
}

UnitaryOperator total_unitary(const Schedule& s) {
    return prefix_unitary(s, static_cast<int>(s.segments().size()));
}

UnitaryOperator prefix_unitary(const Schedule& s, int segment_count) {
    if (segment_count < 0 || segment_count > static_cast<int>(s.segments().size())) {
        throw DimensionError("prefix_unitary: segment count out of range");
    }
    Matrix u = Matrix::Identity(s.dim(), s.dim());
    for (int k = 0; k < segment_count; ++k) {
        const Segment& seg = s.segments()[static_cast<std::size_t>(k)];
        u = matrix_exponential_unitary(seg.hamiltonian, seg.duration).entries() * u;
    }
    return UnitaryOperator(std::move(u));
}

} // namespace beablesim
