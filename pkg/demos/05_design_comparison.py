"""Side-by-side comparison of the candidate three-way drivetrains.

Three questions separate the designs:

1. Mobility: how many independent external motions does each allow?
2. Can the outputs differentiate at all?
3. When one output is disturbed, is the effect on the others symmetric?

The naive splitter fails question 2 (one rigid mode, outputs always
equal).  The cascaded four-output tree fails question 3 (a sibling
output takes twice the hit of a cousin).  The cross-coupled design
passes all three: full differentiation and a disturbance response that
is identical no matter which output is poked.
"""

import numpy as np

from gearnet import (
    BUILDERS,
    build_2_2d,
    build_3ood,
    build_initial_design,
    nullspace_basis,
    impulse_response,
    mobility,
)


def mobility_table() -> None:
    print("mobility (shafts, constraint rank, nullity, external dof):")
    for name in ("initial", "2od", "2-2d", "multi-axle", "3ood"):
        g = BUILDERS[name]()
        r = mobility(g)
        print(f"  {name:10s}  shafts={r.n_shafts:2d}  rank={r.rank:2d}  "
              f"nullity={r.nullity}  external_dof={r.external_dof}")


def initial_design_is_rigid() -> None:
    g = build_initial_design()
    basis = nullspace_basis(g)
    outs = [g.shaft_id(n) for n in g.meta["outputs"]]
    spread = basis[outs].max(axis=0) - basis[outs].min(axis=0)
    print("\nnaive splitter: the whole feasible space is "
          f"{basis.shape[1]} mode(s) wide")
    print(f"  output spread within every mode: {spread.max():.2e} "
          "(the outputs cannot move relative to each other)")


def cascaded_tree_is_lopsided() -> None:
    g = build_2_2d()
    resp = impulse_response(g, "A", held=("root",))
    names = g.meta["outputs"]
    vals = {n: resp[g.shaft_id(n)] for n in names}
    print("\ncascaded tree, unit torque at A with the root ring held:")
    print("  " + "  ".join(f"{n}={vals[n]:+.4f}" for n in names))
    print(f"  sibling B reacts {abs(vals['B'] / vals['C']):.1f}x harder "
          "than cousins C and D")


def cross_coupled_is_symmetric() -> None:
    g = build_3ood()
    resp = impulse_response(g, "O1", held=("input",))
    names = g.meta["outputs"]
    vals = np.array([resp[g.shaft_id(n)] for n in names])
    vals /= vals[0]
    print("\ncross-coupled drivetrain, unit torque at O1 with the input held")
    print("  (accelerations relative to O1):")
    print("  " + "  ".join(f"{n}={v:+.4f}" for n, v in zip(names, vals)))
    print(f"  O2 and O3 match to {abs(vals[1] - vals[2]):.2e}; repeating "
          "the probe at O2 or O3 gives the same picture relabeled")


def main() -> None:
    mobility_table()
    initial_design_is_rigid()
    cascaded_tree_is_lopsided()
    cross_coupled_is_symmetric()


if __name__ == "__main__":
    main()
