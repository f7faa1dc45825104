#include <chrono>
#include <cstdio>
#include <exception>
#include <iostream>

#include "impactlab/experiments.hpp"

/// Runs every acceptance setup with seed 1 and prints one verdict line each.
/// Failing checks are listed under the verdict line.
int main() {
    using namespace impactlab;
    int failed = 0;
    for (const auto& c : acceptance_criteria()) {
        auto start = std::chrono::steady_clock::now();
        bool ok = false;
        std::string detail;
        try {
            Report r = run_experiment(c.experiment, c.overrides, 1);
            ok = r.pass();
            for (const auto& chk : r.checks)
                if (!chk.pass)
                    detail += "    " + chk.name + ": " + fmt(chk.value) + " " + chk.relation + " " + fmt(chk.bound) + "\n";
        } catch (const std::exception& e) {
            detail = std::string("    error: ") + e.what() + "\n";
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %d (%s): %s\n", c.id, c.name.c_str(), ok ? "PASS" : "FAIL");
        std::fputs(detail.c_str(), stdout);
        std::fflush(stdout);
        std::fprintf(stderr, "  %s took %.1f s\n", c.name.c_str(), secs);
        if (!ok) ++failed;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(acceptance_criteria().size()) - failed,
                acceptance_criteria().size());
    return failed == 0 ? 0 : 1;
}
