#include <doctest.h>

#include "autm/gradcheck.hpp"

using namespace autm;

TEST_CASE("relative error metric") {
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(2.0, 1.0) == doctest::Approx(0.5));
  CHECK(relative_error(1e-6, 0.0) == doctest::Approx(1e-2));
  CHECK(relative_error(0.0, 0.0) == 0.0);
}

TEST_CASE("gradient suites pass at 1e-4") {
  const GradcheckReport core = gradcheck_core(3, 30);
  CHECK(core.cases == 30);
  CHECK(core.entries == 30 * 8);
  CHECK(core.max_rel_error < 1e-4);
  const GradcheckReport cond = gradcheck_conditioner(3, 10);
  CHECK(cond.entries > 0);
  CHECK(cond.max_rel_error < 1e-4);
  const GradcheckReport tr = gradcheck_training(3, 4);
  CHECK(tr.entries > 0);
  CHECK(tr.max_rel_error < 1e-4);
}
