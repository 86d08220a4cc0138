#include "doctest.h"
#include "kaczmarz/error.hpp"
#include "kaczmarz/multirhs.hpp"
#include "kaczmarz/problems.hpp"
#include "support.hpp"

using namespace kaczmarz;

TEST_SUITE("multirhs")
{
    TEST_CASE("one column reduces to the sampled argmax step")
    {
        const ProblemInstance p = gen_gaussian(60, 12, 1, 3);
        SimpleRandomSampler s1(60, 0.2), s2(60, 0.2);
        RngStream r1(9), r2(9);
        MultiState ms{DenseColMajor(12, 1), 0};
        IterateState ss{Vector(12, 0.0), 0};
        for (int t = 0; t < 100; ++t) {
            const MultiStepInfo mi = step_multirhs(p.a, p.b, ms, s1, r1);
            const StepInfo si = step_srk(p.a, p.rhs(0), ss, s2, r2);
            CHECK(si.selected.vector() == mi.selection);
            CHECK(mi.rows_touched == 12);
        }
        for (std::size_t j = 0; j < 12; ++j) {
            CHECK(ms.x(j, 0) == doctest::Approx(ss.x[j]).epsilon(1e-13));
        }
    }

    TEST_CASE("X at the solution is stagnant")
    {
        const ProblemInstance p = gen_gaussian(30, 6, 3, 4);
        MultiState ms{*p.x_star, 0};
        SimpleRandomSampler s(30, 0.5);
        RngStream rng(1);
        const MultiStepInfo info = step_multirhs(p.a, p.b, ms, s, rng);
        CHECK(info.stagnant);
        CHECK(ms.x == *p.x_star);
    }

    TEST_CASE("per-column selection is the brute-force argmax over the shared sample")
    {
        const ProblemInstance p = gen_gaussian(200, 40, 5, 5);
        const double b_inf = [&] {
            double v = 0.0;
            for (double x : p.b.data()) {
                v = std::max(v, std::abs(x));
            }
            return v;
        }();
        MultiState ms{DenseColMajor(40, 5), 0};
        SimpleRandomSampler sampler(200, 0.1);
        RngStream rng(2);
        for (int t = 0; t < 50; ++t) {
            const DenseColMajor before = ms.x;
            const MultiStepInfo info = step_multirhs(p.a, p.b, ms, sampler, rng);
            CHECK(info.omega.size() == 20);
            for (std::size_t j = 0; j < 5; ++j) {
                std::size_t best = info.omega[0];
                double best_score = -1.0;
                for (std::size_t i : info.omega) {
                    const double score = std::abs(p.b(i, j) - p.a.row(i).dot(before.col(j))) / p.a.row_norm(i);
                    if (score > best_score) {
                        best_score = score;
                        best = i;
                    }
                }
                CHECK(info.selection[j] == best);
                const std::size_t row = info.selection[j];
                CHECK(std::abs(p.b(row, j) - p.a.row(row).dot(ms.x.col(j))) <= 1e-12 * (1.0 + b_inf));
                const double e0 = ktest::dist_sq(before.col(j), p.x_star->col(j));
                const double e1 = ktest::dist_sq(ms.x.col(j), p.x_star->col(j));
                CHECK(std::sqrt(e1) <= std::sqrt(e0) + 1e-10);
            }
        }
    }

    TEST_CASE("columns decouple given the shared sample sequence")
    {
        const ProblemInstance p = gen_gaussian(80, 10, 3, 6);
        MultiState all{DenseColMajor(10, 3), 0};
        std::vector<MultiState> single(3, MultiState{DenseColMajor(10, 1), 0});
        std::vector<DenseColMajor> b_cols;
        for (std::size_t j = 0; j < 3; ++j) {
            b_cols.push_back(DenseColMajor::from_column(p.b.col(j)));
        }
        SimpleRandomSampler sampler(80, 0.15);
        RngStream rng(3);
        for (int t = 0; t < 100; ++t) {
            const IndexSet omega = sampler.draw(rng);
            const MultiStepInfo joint = step_multirhs_on(p.a, p.b, all, omega);
            for (std::size_t j = 0; j < 3; ++j) {
                const MultiStepInfo alone = step_multirhs_on(p.a, b_cols[j], single[j], omega);
                CHECK(alone.selection[0] == joint.selection[j]);
            }
        }
        for (std::size_t j = 0; j < 3; ++j) {
            for (std::size_t i = 0; i < 10; ++i) {
                CHECK(all.x(i, j) == single[j].x(i, 0));
            }
        }
    }

    TEST_CASE("solve_multirhs")
    {
        const ProblemInstance p = gen_gaussian(400, 50, 4, 7);
        SolverConfig cfg;
        cfg.eta = 0.05;
        cfg.tol = 1e-6;

        const MultiSolveResult at = solve_multirhs(p.a, p.b, cfg, *p.x_star, p.x_star);
        CHECK(at.trajectory.iterations() == 0);
        CHECK(at.trajectory.status == Status::Converged);

        const DenseColMajor x0(50, 4);
        const MultiSolveResult r = solve_multirhs(p.a, p.b, cfg, x0, p.x_star);
        CHECK(r.trajectory.status == Status::Converged);
        CHECK(res_metric_multi(r.state.x, *p.x_star) < 1e-6);
        CHECK(r.trajectory.records.back().selected.size() == 4);

        SolverConfig resid = cfg;
        resid.stopping = StoppingRule::RelativeResidual;
        const MultiSolveResult rr = solve_multirhs(p.a, p.b, resid, x0);
        CHECK(rr.trajectory.status == Status::Converged);
        CHECK(relative_residual_multi(p.a, p.b, rr.state.x) < 1e-6);

        CHECK_THROWS_AS(solve_multirhs(p.a, p.b, cfg, x0), ConfigError);
        CHECK_THROWS_AS(solve_multirhs(p.a, p.b, cfg, DenseColMajor(50, 3), p.x_star), ContractError);
        DenseColMajor zero_col = *p.x_star;
        for (double& v : zero_col.col(2)) {
            v = 0.0;
        }
        CHECK_THROWS_AS(res_metric_multi(x0, zero_col), ConfigError);
    }
}
