#ifndef TVOGP_ACQUISITION_HPP
#define TVOGP_ACQUISITION_HPP

#include <cstdint>
#include <optional>

#include "tvogp/gp.hpp"
#include "tvogp/schedule.hpp"

namespace tvogp {

struct AcquisitionConfig {
    double delta = 0.1;
    double a = 1.0;
    double b = 1.0;
    int T = 600;  // total training epochs
    int w = 6;    // initial window length
    int d = 5;    // schedule dimension
    std::optional<double> kappa_override;
    int n_starts = 10;
    int max_iters = 50;
};

// Exploration weight from the regret theorem, evaluated with the
// current round count in place of the total horizon.
double kappa(int round, const AcquisitionConfig& cfg);

// mu(beta) + sqrt(kappa) * sigma(beta) at query row [beta, t].
double ucb_value(const GPState& state, const Schedule& beta, double round, double kappa_val);

// Multi-start projected-gradient ascent of the UCB over [lo,hi]^d;
// iterates leaving the feasible set are pulled back by sorting.
Schedule maximize_acquisition(const GPState& state, double round, double kappa_val,
                              std::size_t d, double lo, double hi, std::uint64_t seed,
                              const Schedule* warm_start = nullptr, int n_starts = 10,
                              int max_iters = 50);

}  // namespace tvogp

#endif
