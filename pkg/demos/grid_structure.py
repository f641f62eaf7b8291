"""10x10 weight grid: which buyers get paced, and how the paced ones line up.

Run: python3 demos/grid_structure.py
"""

import numpy as np

from pacingeq import check_colinear_pacing, check_monotonicity, gen_grid_instance, solve_equilibrium


def main():
    instance = gen_grid_instance()
    report = solve_equilibrium(instance)
    t = report.profile.multipliers
    print(f"converged={report.converged} rounds={report.rounds} residual={report.linf_residual:.1e}\n")

    W = instance.weight_matrix()
    w1 = np.unique(W[:, 0])
    w2 = np.unique(W[:, 1])
    print("multipliers (rows: w1 ascending, columns: w2 ascending; '.' = unpaced)")
    print("       " + " ".join(f"{v:5.2f}" for v in w2))
    for a in w1:
        cells = []
        for b in w2:
            i = int(np.flatnonzero((W[:, 0] == a) & (W[:, 1] == b))[0])
            cells.append("    ." if t[i] <= 1e-9 else f"{t[i]:5.2f}")
        print(f"{a:5.2f}  " + " ".join(cells))

    mono = check_monotonicity(instance, report.profile)
    col = check_colinear_pacing(instance, report.profile)
    print(f"\nmonotonicity: {mono['count']} violations over {mono['pairs']} comparable pairs")
    print(f"co-directional paced types: max spread of paced vectors {col['max_spread']:.1e}, "
          f"max distance to the largest unpaced vector {col['max_distance_to_critical']:.3f}")


if __name__ == "__main__":
    main()
