// Applies e^{-Delta} to a bump through the spectral and the principal-value
// paths and prints how the truncations approach the spectral result.

#include <cstdio>

#include "hankel/analysis.hpp"
#include "hankel/multiplier.hpp"

using namespace hankel;

int main() {
    const Order order({1.0});
    const Grid grid = make_grid(order, default_axis_spec(1));
    const InputFunction in = bump_input(1);
    const GridFunction f = in.sample(grid);
    const LaplaceSymbol sym = resolvent_symbol(1.0);

    const GridFunction spectral = spectral_apply(sym, TransformPlan(grid), f);
    const PVConfig cfg;
    const PVResult pv = pv_apply(sym, grid, in.source, cfg);

    const double nf = lp_norm(f, 2.0);
    std::printf("%-12s %s\n", "eps", "||pv_eps - spectral|| / ||f||");
    for (std::size_t k = 0; k < pv.eps.size(); ++k)
        std::printf("%-12.4g %.3e\n", pv.eps[k], lp_norm(pv.truncation(k) - spectral, 2.0) / nf);
    std::printf("%-12s %.3e\n", "extrapolated", lp_norm(pv.as_grid_function() - spectral, 2.0) / nf);
    return 0;
}
