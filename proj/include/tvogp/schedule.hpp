#ifndef TVOGP_SCHEDULE_HPP
#define TVOGP_SCHEDULE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace tvogp {

// A sorted vector of integration knots in [lo, hi], the bandit's arm.
// The endpoints 0 and 1 are never stored; evaluation_partition()
// materializes them.
struct Schedule {
    std::vector<double> interior;
    double lo = 0.05;
    double hi = 0.95;

    std::size_t dim() const { return interior.size(); }

    // [0, interior..., 1] with duplicates collapsed (zero-width
    // intervals contribute nothing to a Riemann sum).
    std::vector<double> evaluation_partition() const;

    std::string to_json() const;
    static Schedule from_json(const std::string& text, double lo = 0.05, double hi = 0.95);
};

// Sorting projection: sort ascending, then clamp into [lo, hi].
// Idempotent and permutation-invariant.
Schedule project_sorted(const std::vector<double>& raw, double lo = 0.05, double hi = 0.95);

// Uniform partition {0, 1/d, ..., (d-1)/d, 1}; interior holds d-1 knots.
Schedule linear_schedule(std::size_t d);

// Geometric ladder of d-1 interior knots beta1 * r^j ending one step
// below 1, so the partition is {0, beta1, ..., 1}.
Schedule log_schedule(std::size_t d, double beta1);

// d i.i.d. uniforms on [lo, hi], canonicalized.
Schedule random_schedule(std::size_t d, std::uint64_t seed, double lo = 0.05, double hi = 0.95);

}  // namespace tvogp

#endif
