#include <doctest.h>

#include <algorithm>
#include <random>

#include "tvogp/schedule.hpp"

using namespace tvogp;

TEST_CASE("project_sorted sorts and clamps") {
    CHECK(project_sorted({0.7, 0.2}, 0.0, 1.0).interior == std::vector<double>{0.2, 0.7});
    CHECK(project_sorted({0.1, 0.3, 0.9}, 0.0, 1.0).interior ==
          std::vector<double>{0.1, 0.3, 0.9});
    CHECK(project_sorted({0.99, 0.01}).interior == std::vector<double>{0.05, 0.95});
}

TEST_CASE("project_sorted rejects bad input") {
    CHECK_THROWS_AS(project_sorted({}), std::invalid_argument);
    CHECK_THROWS_AS(project_sorted({0.1, std::nan("")}), std::invalid_argument);
}

TEST_CASE("project_sorted is idempotent and permutation-invariant") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-0.2, 1.2);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> raw(5);
        for (double& v : raw) v = unif(rng);
        const Schedule once = project_sorted(raw);
        CHECK(project_sorted(once.interior).interior == once.interior);
        std::vector<double> shuffled = raw;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(project_sorted(shuffled).interior == once.interior);
    }
}

TEST_CASE("linear_schedule") {
    CHECK(linear_schedule(2).evaluation_partition() == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(linear_schedule(1).evaluation_partition() == std::vector<double>{0.0, 1.0});
    CHECK(linear_schedule(4).evaluation_partition() ==
          std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK_THROWS_AS(linear_schedule(0), std::invalid_argument);
}

TEST_CASE("log_schedule") {
    {
        const auto part = log_schedule(2, 0.025).evaluation_partition();
        REQUIRE(part.size() == 3);
        CHECK(part[1] == doctest::Approx(0.025).epsilon(1e-12));
    }
    {
        // ratio 10 per rung
        const auto part = log_schedule(3, 0.01).evaluation_partition();
        REQUIRE(part.size() == 4);
        CHECK(part[1] == doctest::Approx(0.01).epsilon(1e-12));
        CHECK(part[2] == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(part[3] == 1.0);
    }
    {
        const auto part = log_schedule(2, 0.5).evaluation_partition();
        CHECK(part == std::vector<double>{0.0, 0.5, 1.0});
    }
    CHECK_THROWS_AS(log_schedule(3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(log_schedule(3, 1.5), std::invalid_argument);
}

TEST_CASE("random_schedule determinism and range") {
    const Schedule one = random_schedule(1, 42);
    REQUIRE(one.dim() == 1);
    CHECK(one.interior[0] >= 0.05);
    CHECK(one.interior[0] <= 0.95);
    CHECK(random_schedule(5, 99).interior == random_schedule(5, 99).interior);
    const Schedule s = random_schedule(5, 3);
    CHECK(std::is_sorted(s.interior.begin(), s.interior.end()));
}

TEST_CASE("evaluation partitions are strictly increasing 0..1") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const Schedule s = random_schedule(8, rng());
        const auto part = s.evaluation_partition();
        CHECK(part.front() == 0.0);
        CHECK(part.back() == 1.0);
        for (std::size_t j = 1; j < part.size(); ++j) CHECK(part[j] > part[j - 1]);
    }
    // duplicates collapse
    Schedule dup;
    dup.interior = {0.3, 0.3, 0.3};
    CHECK(dup.evaluation_partition() == std::vector<double>{0.0, 0.3, 1.0});
}

TEST_CASE("schedule json round trip") {
    const Schedule s = project_sorted({0.1, 0.4, 0.8}, 0.0, 1.0);
    CHECK(s.to_json() == "[0.1,0.4,0.8]");
    CHECK(Schedule::from_json(s.to_json(), 0.0, 1.0).interior == s.interior);
}
