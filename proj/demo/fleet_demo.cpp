// Walks the canonical three-location star from cheap to expensive AVs and
// prints how the optimal fleet changes.

#include <cstdio>

#include "mixauto/mixauto.hpp"

int main() {
  using namespace mixauto;
  const DemandPattern star = star_to_complete(3, 0.0);
  const double beta = 0.6;

  std::printf("beta = %.2f, omega = 1, k_t = %.2f\n\n", beta, 1.0 - beta);
  std::printf("%6s %10s %10s %9s %9s  %s\n", "k", "mixed", "human", "sum x", "sum z",
              "regime");
  for (double k : grid(0.0, 0.5, 0.05)) {
    const auto params = MarketParams::from_k(beta, 1.0, k);
    const auto mixed = solve_program(ProgramKind::mixed_alternative, star, params);
    const auto human = solve_program(ProgramKind::human_only, star, params);
    const Regime regime = classify(mixed.total_x(), mixed.total_z(), mass_threshold(star));
    std::printf("%6.2f %10.6f %10.6f %9.5f %9.5f  %s\n", k, mixed.profit, human.profit,
                mixed.total_x(), mixed.total_z(), std::string(to_string(regime)).c_str());
  }

  const ThresholdRow row = find_thresholds(star, 1.0, beta);
  std::printf("\nk_a = %.4f  k_s = %.4f\n", row.k_a, row.k_s);
  const auto between = solve_program(ProgramKind::mixed_alternative, star,
                                     MarketParams::from_k(beta, 1.0, 0.5 * (row.k_a + row.k_s)));
  const FleetState mixed = recover_original(between, star);
  std::printf("between them, location prices:");
  for (Index i = 0; i < mixed.n(); ++i) std::printf(" %.4f", mixed.p(i));
  std::printf("\n");
}
