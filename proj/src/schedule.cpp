#include "tvogp/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tvogp {

std::vector<double> Schedule::evaluation_partition() const {
    std::vector<double> part;
    part.reserve(interior.size() + 2);
    part.push_back(0.0);
    for (double b : interior) {
        if (b > part.back()) part.push_back(b);
    }
    if (part.back() < 1.0) part.push_back(1.0);
    return part;
}

std::string Schedule::to_json() const {
    nlohmann::json j = interior;
    return j.dump();
}

Schedule Schedule::from_json(const std::string& text, double lo, double hi) {
    auto j = nlohmann::json::parse(text);
    return project_sorted(j.get<std::vector<double>>(), lo, hi);
}

Schedule project_sorted(const std::vector<double>& raw, double lo, double hi) {
    if (raw.empty()) throw std::invalid_argument("project_sorted: empty input");
    for (double v : raw) {
        if (!std::isfinite(v)) throw std::invalid_argument("project_sorted: non-finite input");
    }
    Schedule s;
    s.lo = lo;
    s.hi = hi;
    s.interior = raw;
    std::sort(s.interior.begin(), s.interior.end());
    for (double& v : s.interior) v = std::clamp(v, lo, hi);
    return s;
}

Schedule linear_schedule(std::size_t d) {
    if (d == 0) throw std::invalid_argument("linear_schedule: d must be >= 1");
    Schedule s;
    s.lo = 0.0;
    s.hi = 1.0;
    for (std::size_t j = 1; j < d; ++j) {
        s.interior.push_back(static_cast<double>(j) / static_cast<double>(d));
    }
    return s;
}

Schedule log_schedule(std::size_t d, double beta1) {
    if (d < 2) throw std::invalid_argument("log_schedule: d must be >= 2");
    if (!(beta1 > 0.0 && beta1 < 1.0)) {
        throw std::invalid_argument("log_schedule: beta1 must lie in (0,1)");
    }
    // d-1 interior knots beta1 * r^j, j = 0..d-2, with r chosen so the
    // next rung lands exactly on 1.
    Schedule s;
    s.lo = 0.0;
    s.hi = 1.0;
    const double log_r = -std::log(beta1) / static_cast<double>(d - 1);
    for (std::size_t j = 0; j + 1 < d; ++j) {
        s.interior.push_back(std::exp(std::log(beta1) + static_cast<double>(j) * log_r));
    }
    return s;
}

Schedule random_schedule(std::size_t d, std::uint64_t seed, double lo, double hi) {
    if (d == 0) throw std::invalid_argument("random_schedule: d must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(lo, hi);
    std::vector<double> raw(d);
    for (double& v : raw) v = unif(rng);
    return project_sorted(raw, lo, hi);
}

}  // namespace tvogp
