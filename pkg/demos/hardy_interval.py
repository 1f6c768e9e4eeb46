"""Local Hardy constants on the unit interval, and how slowly they arrive.

With the boundary at the origin and weight x^delta, the smallest Rayleigh
quotient h(phi) / integral of x^(delta-2) phi^2 is ((1-delta)/2)^2 for
delta < 1. The discrete quotient is an upper bound that closes the gap only
like 1/log(cells) — the table makes the rate visible rather than hiding it.
"""

import numpy as np

from snowcap import Grid, DistanceField, hardy_quotient


def line_field(n):
    grid = Grid(np.array([0.0]), 1.0 / n, (n,), np.ones(n, dtype=bool))
    return DistanceField(grid, grid.axis_centers(0).copy(), 0.0, 1.0)


def main():
    print("discrete local Hardy quotient on (0,1), boundary at 0")
    print("cells      delta=0.0    delta=0.5    delta=1.0")
    for n in (100, 1000, 10_000, 100_000):
        row = [hardy_quotient(line_field(n), d, (0.0,), 2.0) for d in (0.0, 0.5, 1.0)]
        print(f"{n:>6}     {row[0]:>9.5f}    {row[1]:>9.5f}    {row[2]:>9.5f}")
    print("limit      {:>9.5f}    {:>9.5f}    {:>9.5f}".format(0.25, 0.0625, 0.0))

    # the delta=0 gap shrinks like c / log n: show the effective constant
    print("\n(b(n) - 1/4) * log n, delta = 0:")
    for n in (1000, 10_000, 100_000):
        b = hardy_quotient(line_field(n), 0.0, (0.0,), 2.0)
        print(f"  n={n:>6}: {(b - 0.25) * np.log(n):.4f}")


if __name__ == "__main__":
    main()
