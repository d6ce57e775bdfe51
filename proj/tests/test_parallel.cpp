#include "doctest.h"
#include "helpers.hpp"

#include "ks/parallel.hpp"
#include "ks/semigroup.hpp"
#include "ks/solver.hpp"

#include <atomic>
#include <mutex>
#include <cstdlib>
#include <set>
#include <stdexcept>
#include <thread>

using namespace ks;

namespace {

struct ThreadsEnv {
    explicit ThreadsEnv(const char* v) { setenv("KS_THREADS", v, 1); }
    ~ThreadsEnv() { unsetenv("KS_THREADS"); }
};

}  // namespace

TEST_CASE("worker count follows KS_THREADS") {
    {
        ThreadsEnv env("3");
        CHECK(worker_count() == 3);
    }
    {
        ThreadsEnv env("0");
        CHECK(worker_count() >= 1);
    }
    {
        ThreadsEnv env("lots");
        CHECK(worker_count() == std::max(1u, std::thread::hardware_concurrency()));
    }
}

TEST_CASE("parallel_for visits every index exactly once") {
    ThreadsEnv env("4");
    for (size_t count : {0, 1, 3, 4, 17, 1000}) {
        std::vector<std::atomic<int>> hits(count);
        parallel_for(count, [&](size_t i) { hits[i]++; });
        for (size_t i = 0; i < count; ++i) CHECK(hits[i] == 1);
    }
}

TEST_CASE("parallel_for uses several threads and rethrows") {
    ThreadsEnv env("4");
    std::mutex m;
    std::set<std::thread::id> ids;
    parallel_for(8, [&](size_t) {
        std::lock_guard<std::mutex> lock(m);
        ids.insert(std::this_thread::get_id());
    });
    CHECK(ids.size() == 4);
    CHECK_THROWS_AS(parallel_for(8, [](size_t i) { if (i == 5) throw std::runtime_error("boom"); }),
                    std::runtime_error);
}

TEST_CASE("solver output does not depend on the thread count") {
    SolverConfig cfg;
    cfg.grid = make_grid(32, 16.0);
    cfg.tgrid = TimeGrid::geometric(1e-3, 2.0, 16);
    const ScalarField u0 = gaussian(cfg.grid, 1e-3, 0.5);
    const ScalarField w0 = 0.5 * gaussian(cfg.grid, 1e-3, 0.8);
    SolutionReport one, many;
    {
        ThreadsEnv env("1");
        one = picard_solve(u0, w0, cfg);
    }
    {
        ThreadsEnv env("5");
        many = picard_solve(u0, w0, cfg);
    }
    CHECK(one.residuals == many.residuals);
    for (size_t j = 0; j < one.u.size(); ++j) {
        CHECK((one.u[j].values == many.u[j].values).all());
        CHECK((one.w[j].values == many.w[j].values).all());
    }
    CHECK(one.thm1->lhs == many.thm1->lhs);
}
