#include <gtest/gtest.h>

#include <cstdio>

#include "bohrlab/acceptance.hpp"

using namespace bohrlab;

namespace {

void run_criterion(int id) {
    acceptance::CriterionResult r = acceptance::run_one(id, RunConfig{});
    std::printf("[criterion %2d] %s  %-24s (%.2f s)  %s\n", r.id, r.pass ? "PASS" : "FAIL",
                r.name.c_str(), r.seconds, r.detail.c_str());
    std::fflush(stdout);
    EXPECT_TRUE(r.pass) << r.detail;
}

} // namespace

TEST(Acceptance, C01TransformIdentities) { run_criterion(1); }
TEST(Acceptance, C02CountEquivalence) { run_criterion(2); }
TEST(Acceptance, C03FreimanExactness) { run_criterion(3); }
TEST(Acceptance, C04BohrLawsRegularity) { run_criterion(4); }
TEST(Acceptance, C05CrootSisaskTranslates) { run_criterion(5); }
TEST(Acceptance, C06KKIterationLaws) { run_criterion(6); }
TEST(Acceptance, C07EnergyIncrement) { run_criterion(7); }
TEST(Acceptance, C08EndToEndSoundness) { run_criterion(8); }
TEST(Acceptance, C09Constructions) { run_criterion(9); }
TEST(Acceptance, C10ReplayDeterminism) { run_criterion(10); }
