#include <cstdlib>
#include <string>

#include "doctest.h"

namespace {

// Exit code of the CLI binary with the given arguments, stdout/stderr dropped.
int run_cli(const std::string& args) {
    const std::string cmd =
        std::string(RELAXSORT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("demo runs and exits cleanly") {
    CHECK(run_cli("demo") == 0);
    CHECK(run_cli("demo --scores 9,1,5,2 --tau 0.5 --metric l2 --operator neuralsort") == 0);
    CHECK(run_cli("demo --scores 1,1") == 0);  // tie warning, stable order
}

TEST_CASE("usage errors exit with 2") {
    CHECK(run_cli("") == 2);
    CHECK(run_cli("demo --no-such-flag") == 2);
    CHECK(run_cli("demo --scores abc") == 2);
    CHECK(run_cli("demo --tau 0") == 2);
    CHECK(run_cli("demo --operator bogus") == 2);
    CHECK(run_cli("properties --suite nonsense") == 2);
}

TEST_CASE("gradcheck exit code reflects the verdict") {
    CHECK(run_cli("gradcheck --n 6 --trials 5 --seed 1") == 0);
    CHECK(run_cli("gradcheck --n 6 --trials 5 --tol 0 --seed 1") == 1);
}

TEST_CASE("property suites run from the CLI") {
    CHECK(run_cli("properties --suite loss --seed 1") == 0);
}

TEST_CASE("bench writes a table to stdout") {
    CHECK(run_cli("bench --n-list 20 --operators softsort --batch 2 --epochs 2 --out -") == 0);
}

TEST_CASE("knn trains a short run") {
    CHECK(run_cli("knn --epochs 1 --seed 4") == 0);
}
