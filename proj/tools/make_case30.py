#!/usr/bin/env python3
"""Generates tests/fixtures/case30.m, a deterministic synthetic 30-bus case.

The network is a 30-bus ring with five chords and one parallel branch, sized
so the dispatch problem is comfortably feasible (total capacity is about 2.5x
total demand). The case deliberately exercises every parser and model feature
the fixture tests look for: off-nominal taps, phase shifts, line charging,
MVA ratings, mixed quadratic and piecewise-linear generator costs, and a
designated slack bus.

Run from the repository root:

    python3 tools/make_case30.py > tests/fixtures/case30.m

The RNG seed is fixed; the committed fixture is the script's exact output.
"""

import random

RNG = random.Random(20240718)

NUM_BUSES = 30
GEN_BUSES = [1, 2, 13, 22, 23, 27]

# (bus, c2 $/MW^2, c1 $/MWh, pmax MW) for the quadratic units.
QUAD_GENS = [
    (1, 0.0200, 20.0, 120.0),
    (2, 0.0175, 22.0, 100.0),
    (13, 0.0625, 30.0, 60.0),
    (22, 0.0083, 26.0, 80.0),
    (23, 0.0250, 28.0, 50.0),
]
# The unit at bus 27 gets a convex piecewise-linear cost instead:
# points (MW, $) with increasing slopes 30 then 45 $/MWh.
PWL_POINTS = [(0.0, 0.0), (40.0, 1200.0), (80.0, 3000.0)]
PWL_PMAX = 80.0

CHORDS = [(1, 15), (3, 18), (5, 20), (8, 25), (12, 27)]
PARALLEL = (14, 15)  # duplicates one ring branch

# Off-nominal taps / phase shifts (degrees) on chord branches.
TAPS = {(1, 15): (0.97, 0.0), (3, 18): (1.025, -1.2), (5, 20): (0.985, 0.8), (8, 25): (1.05, 0.0)}


def fmt(v):
    """Shortest clean decimal: integers without a trailing .0."""
    if v == int(v):
        return str(int(v))
    return repr(round(v, 6))


def main():
    buses = []
    for i in range(1, NUM_BUSES + 1):
        bus_type = 3 if i == 1 else (2 if i in GEN_BUSES else 1)
        demand = 0.0 if i in GEN_BUSES or RNG.random() < 0.15 else round(RNG.uniform(2.0, 14.0), 1)
        vm = round(RNG.uniform(0.98, 1.03), 3)
        buses.append((i, bus_type, demand, vm))

    branches = []
    ring = [(i, i + 1) for i in range(1, NUM_BUSES)] + [(NUM_BUSES, 1)]
    for f, t in ring + [PARALLEL] + CHORDS:
        r = round(RNG.uniform(0.008, 0.04), 4)
        x = round(RNG.uniform(0.06, 0.22), 4)
        b = round(RNG.uniform(0.02, 0.05), 3) if RNG.random() < 0.25 else 0.0
        rate = float(RNG.choice([80, 100, 120, 150, 200])) if RNG.random() < 0.3 else 0.0
        tap, shift = TAPS.get((f, t), (0.0, 0.0))
        branches.append((f, t, r, x, b, rate, tap, shift))

    total_demand = sum(d for _, _, d, _ in buses)
    total_capacity = sum(p for *_, p in QUAD_GENS) + PWL_PMAX

    out = []
    out.append("function mpc = case30")
    out.append("% Synthetic 30-bus ring-with-chords system, generated by")
    out.append("% tools/make_case30.py (fixed seed; regenerate with that script only).")
    out.append("%% Total demand {:.1f} MW, total generation capacity {:.1f} MW.".format(
        total_demand, total_capacity))
    out.append("mpc.version = '2';")
    out.append("")
    out.append("%% system MVA base")
    out.append("mpc.baseMVA = 100;")
    out.append("")
    out.append("%% bus data")
    out.append("%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin")
    out.append("mpc.bus = [")
    for i, bus_type, demand, vm in buses:
        out.append("\t{}\t{}\t{}\t0\t0\t0\t1\t{}\t0\t135\t1\t1.06\t0.94;".format(
            i, bus_type, fmt(demand), fmt(vm)))
    out.append("];")
    out.append("")
    out.append("%% generator data")
    out.append("%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin")
    out.append("mpc.gen = [")
    for bus, _, _, pmax in QUAD_GENS:
        vm = next(v for i, _, _, v in buses if i == bus)
        out.append("\t{}\t0\t0\t0\t0\t{}\t100\t1\t{}\t0;".format(bus, fmt(vm), fmt(pmax)))
    vm27 = next(v for i, _, _, v in buses if i == 27)
    out.append("\t27\t0\t0\t0\t0\t{}\t100\t1\t{}\t0;".format(fmt(vm27), fmt(PWL_PMAX)))
    out.append("];")
    out.append("")
    out.append("%% branch data")
    out.append("%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax")
    out.append("mpc.branch = [")
    for f, t, r, x, b, rate, tap, shift in branches:
        out.append("\t{}\t{}\t{}\t{}\t{}\t{}\t0\t0\t{}\t{}\t1\t-360\t360;".format(
            f, t, fmt(r), fmt(x), fmt(b), fmt(rate), fmt(tap), fmt(shift)))
    out.append("];")
    out.append("")
    out.append("%% generator cost data")
    out.append("%\t2\tstartup\tshutdown\tn\tc2\tc1\tc0  (polynomial rows)")
    out.append("%\t1\tstartup\tshutdown\tn\tx1\ty1\t...\txn\tyn  (piecewise rows)")
    out.append("mpc.gencost = [")
    # All rows padded with trailing zeros to one rectangular width, as
    # MATPOWER does when cost models of different sizes share the table.
    rows = [[2, 0, 0, 3, c2, c1, 0] for _, c2, c1, _ in QUAD_GENS]
    rows.append([1, 0, 0, len(PWL_POINTS)] + [v for point in PWL_POINTS for v in point])
    width = max(len(row) for row in rows)
    for row in rows:
        padded = row + [0] * (width - len(row))
        out.append("\t" + "\t".join(fmt(v) for v in padded) + ";")
    out.append("];")
    out.append("")
    print("\n".join(out))


if __name__ == "__main__":
    main()
