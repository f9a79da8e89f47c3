#!/usr/bin/env python3
"""Regenerate the bundled IEEE 14-bus data files.

Solves the case with a standalone Y-bus polar Newton-Raphson (numpy only)
and writes:
    data/ieee14.m             - case file, matrix-block subset
    data/ieee14/buses.csv     - native format (net demand, see README)
    data/ieee14/branches.csv
    data/ieee14_solution.csv  - solved operating point, full precision

The solved voltages are checked against the historical published solution
(bus table Vm/Va) before anything is written.
"""
import math
import os

import numpy as np

BASE_MVA = 100.0

# bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin
BUS = [
    [1, 3, 0.0, 0.0, 0.0, 0.0, 1, 1.060, 0.00, 0, 1, 1.06, 0.94],
    [2, 2, 21.7, 12.7, 0.0, 0.0, 1, 1.045, -4.98, 0, 1, 1.06, 0.94],
    [3, 2, 94.2, 19.0, 0.0, 0.0, 1, 1.010, -12.72, 0, 1, 1.06, 0.94],
    [4, 1, 47.8, -3.9, 0.0, 0.0, 1, 1.019, -10.33, 0, 1, 1.06, 0.94],
    [5, 1, 7.6, 1.6, 0.0, 0.0, 1, 1.020, -8.78, 0, 1, 1.06, 0.94],
    [6, 2, 11.2, 7.5, 0.0, 0.0, 1, 1.070, -14.22, 0, 1, 1.06, 0.94],
    [7, 1, 0.0, 0.0, 0.0, 0.0, 1, 1.062, -13.37, 0, 1, 1.06, 0.94],
    [8, 2, 0.0, 0.0, 0.0, 0.0, 1, 1.090, -13.36, 0, 1, 1.06, 0.94],
    [9, 1, 29.5, 16.6, 0.0, 19.0, 1, 1.056, -14.94, 0, 1, 1.06, 0.94],
    [10, 1, 9.0, 5.8, 0.0, 0.0, 1, 1.051, -15.10, 0, 1, 1.06, 0.94],
    [11, 1, 3.5, 1.8, 0.0, 0.0, 1, 1.057, -14.79, 0, 1, 1.06, 0.94],
    [12, 1, 6.1, 1.6, 0.0, 0.0, 1, 1.055, -15.07, 0, 1, 1.06, 0.94],
    [13, 1, 13.5, 5.8, 0.0, 0.0, 1, 1.050, -15.16, 0, 1, 1.06, 0.94],
    [14, 1, 14.9, 5.0, 0.0, 0.0, 1, 1.036, -16.04, 0, 1, 1.06, 0.94],
]

# bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin
GEN = [
    [1, 232.4, -16.9, 10.0, 0.0, 1.060, 100, 1, 332.4, 0],
    [2, 40.0, 42.4, 50.0, -40.0, 1.045, 100, 1, 140.0, 0],
    [3, 0.0, 23.4, 40.0, 0.0, 1.010, 100, 1, 100.0, 0],
    [6, 0.0, 12.2, 24.0, -6.0, 1.070, 100, 1, 100.0, 0],
    [8, 0.0, 17.4, 24.0, -6.0, 1.090, 100, 1, 100.0, 0],
]

# fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax
BRANCH = [
    [1, 2, 0.01938, 0.05917, 0.0528, 9900, 0, 0, 0, 0, 1, -360, 360],
    [1, 5, 0.05403, 0.22304, 0.0492, 9900, 0, 0, 0, 0, 1, -360, 360],
    [2, 3, 0.04699, 0.19797, 0.0438, 9900, 0, 0, 0, 0, 1, -360, 360],
    [2, 4, 0.05811, 0.17632, 0.0340, 9900, 0, 0, 0, 0, 1, -360, 360],
    [2, 5, 0.05695, 0.17388, 0.0346, 9900, 0, 0, 0, 0, 1, -360, 360],
    [3, 4, 0.06701, 0.17103, 0.0128, 9900, 0, 0, 0, 0, 1, -360, 360],
    [4, 5, 0.01335, 0.04211, 0.0, 9900, 0, 0, 0, 0, 1, -360, 360],
    [4, 7, 0.0, 0.20912, 0.0, 9900, 0, 0, 0.978, 0, 1, -360, 360],
    [4, 9, 0.0, 0.55618, 0.0, 9900, 0, 0, 0.969, 0, 1, -360, 360],
    [5, 6, 0.0, 0.25202, 0.0, 9900, 0, 0, 0.932, 0, 1, -360, 360],
    [6, 11, 0.09498, 0.19890, 0.0, 9900, 0, 0, 0, 0, 1, -360, 360],
    [6, 12, 0.12291, 0.25581, 0.0, 9900, 0, 0, 0, 0, 1, -360, 360],
    [6, 13, 0.06615, 0.13027, 0.0, 9900, 0, 0, 0, 0, 1, -360, 360],
    [7, 8, 0.0, 0.17615, 0.0, 9900, 0, 0, 0, 0, 1, -360, 360],
    [7, 9, 0.0, 0.11001, 0.0, 9900, 0, 0, 0, 0, 1, -360, 360],
    [9, 10, 0.03181, 0.08450, 0.0, 9900, 0, 0, 0, 0, 1, -360, 360],
    [9, 14, 0.12711, 0.27038, 0.0, 9900, 0, 0, 0, 0, 1, -360, 360],
    [10, 11, 0.08205, 0.19207, 0.0, 9900, 0, 0, 0, 0, 1, -360, 360],
    [12, 13, 0.22092, 0.19988, 0.0, 9900, 0, 0, 0, 0, 1, -360, 360],
    [13, 14, 0.17093, 0.34802, 0.0, 9900, 0, 0, 0, 0, 1, -360, 360],
]


def build_ybus():
    n = len(BUS)
    Y = np.zeros((n, n), dtype=complex)
    for fb, tb, r, x, b, *rest in [row[:5] + row[5:] for row in BRANCH]:
        ratio = rest[3]
        f, t = int(fb) - 1, int(tb) - 1
        ys = 1.0 / complex(r, x)
        bc = complex(0.0, b / 2.0)
        a = ratio if ratio != 0 else 1.0
        Y[f, f] += (ys + bc) / (a * a)
        Y[t, t] += ys + bc
        Y[f, t] += -ys / a
        Y[t, f] += -ys / a
    for row in BUS:
        i = int(row[0]) - 1
        Y[i, i] += complex(row[4], row[5]) / BASE_MVA
    return Y


def solve_newton(tol=1e-12, max_iter=30):
    n = len(BUS)
    Y = build_ybus()
    kind = np.array([int(r[1]) for r in BUS])  # 1 PQ, 2 PV, 3 slack
    pd = np.array([r[2] for r in BUS]) / BASE_MVA
    qd = np.array([r[3] for r in BUS]) / BASE_MVA
    pg = np.zeros(n)
    vset = np.array([r[7] for r in BUS], dtype=float)
    for g in GEN:
        pg[int(g[0]) - 1] += g[1] / BASE_MVA
        vset[int(g[0]) - 1] = g[5]
    p_sched = pg - pd
    q_sched = -qd

    slack = int(np.where(kind == 3)[0][0])
    pv = [i for i in range(n) if kind[i] == 2]
    pq = [i for i in range(n) if kind[i] == 1]
    ang_idx = [i for i in range(n) if i != slack]
    mag_idx = pq

    vm = np.ones(n)
    vm[slack] = vset[slack]
    for i in pv:
        vm[i] = vset[i]
    va = np.zeros(n)

    def injections(vm, va):
        v = vm * np.exp(1j * va)
        s = v * np.conj(Y @ v)
        return s.real, s.imag

    for _ in range(max_iter):
        p, q = injections(vm, va)
        mp = np.array([p_sched[i] - p[i] for i in ang_idx])
        mq = np.array([q_sched[i] - q[i] for i in mag_idx])
        mis = np.concatenate([mp, mq])
        if np.max(np.abs(mis)) < tol:
            break
        m = len(ang_idx) + len(mag_idx)
        J = np.zeros((m, m))
        h = 1e-7
        for col, i in enumerate(ang_idx):
            va2 = va.copy()
            va2[i] += h
            p2, q2 = injections(vm, va2)
            J[: len(ang_idx), col] = [(p2[k] - p[k]) / h for k in ang_idx]
            J[len(ang_idx):, col] = [(q2[k] - q[k]) / h for k in mag_idx]
        for col, i in enumerate(mag_idx):
            vm2 = vm.copy()
            vm2[i] += h
            p2, q2 = injections(vm2, va)
            J[: len(ang_idx), len(ang_idx) + col] = [(p2[k] - p[k]) / h for k in ang_idx]
            J[len(ang_idx):, len(ang_idx) + col] = [(q2[k] - q[k]) / h for k in mag_idx]
        step = np.linalg.solve(J, mis)
        for col, i in enumerate(ang_idx):
            va[i] += step[col]
        for col, i in enumerate(mag_idx):
            vm[i] += step[len(ang_idx) + col]
    else:
        raise RuntimeError("power flow did not converge")
    return vm, va


def main():
    root = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..")
    vm, va = solve_newton()
    vm_pub = np.array([r[7] for r in BUS])
    va_pub = np.radians([r[8] for r in BUS])
    dvm = np.max(np.abs(vm - vm_pub))
    dva = np.max(np.abs(va - va_pub))
    print(f"max |Vm - published| = {dvm:.2e}  (historical rounding ~1.5e-3)")
    print(f"max |Va - published| = {dva:.2e} rad")
    assert dvm < 2e-3 and dva < 2e-3, "case data disagrees with published solution"

    os.makedirs(os.path.join(root, "data", "ieee14"), exist_ok=True)

    with open(os.path.join(root, "data", "ieee14.m"), "w") as f:
        f.write("function mpc = ieee14\n")
        f.write("%IEEE14  14-bus test case, common-data-format derived parameters.\n")
        f.write("mpc.version = '2';\n\nmpc.baseMVA = 100;\n\n")
        f.write("%% bus data\n")
        f.write("%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\n")
        f.write("mpc.bus = [\n")
        for r in BUS:
            f.write("\t" + "\t".join(fmt(v) for v in r) + ";\n")
        f.write("];\n\n%% generator data\n")
        f.write("%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\n")
        f.write("mpc.gen = [\n")
        for r in GEN:
            f.write("\t" + "\t".join(fmt(v) for v in r) + ";\n")
        f.write("];\n\n%% branch data\n")
        f.write("%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax\n")
        f.write("mpc.branch = [\n")
        for r in BRANCH:
            f.write("\t" + "\t".join(fmt(v) for v in r) + ";\n")
        f.write("];\n")

    # native tables: pd/qd are net demand (load minus scheduled generation)
    pg = {int(g[0]): g[1] for g in GEN}
    qgset = {int(g[0]): g[5] for g in GEN}
    kinds = {3: "slack", 2: "pv", 1: "pq"}
    with open(os.path.join(root, "data", "ieee14", "buses.csv"), "w") as f:
        f.write("id,kind,vm,va,pd,qd,gs,bs\n")
        for r in BUS:
            bid = int(r[0])
            net_p = (r[2] - pg.get(bid, 0.0)) / BASE_MVA
            net_q = r[3] / BASE_MVA
            vmag = qgset.get(bid, r[7])
            f.write(f"{bid},{kinds[int(r[1])]},{vmag:.9g},{math.radians(r[8]):.9g},"
                    f"{net_p:.9g},{net_q:.9g},{r[4] / BASE_MVA:.9g},{r[5] / BASE_MVA:.9g}\n")
    with open(os.path.join(root, "data", "ieee14", "branches.csv"), "w") as f:
        f.write("from,to,r,x,b,tap\n")
        for r in BRANCH:
            tap = r[8] if r[8] != 0 else 1.0
            f.write(f"{int(r[0])},{int(r[1])},{r[2]:.9g},{r[3]:.9g},{r[4]:.9g},{tap:.9g}\n")

    with open(os.path.join(root, "data", "ieee14_solution.csv"), "w") as f:
        f.write("bus,vm,va\n")
        for i in range(len(BUS)):
            f.write(f"{i + 1},{vm[i]:.12g},{va[i]:.12g}\n")
    print("wrote data/ieee14.m, data/ieee14/{buses,branches}.csv, data/ieee14_solution.csv")


def fmt(v):
    if isinstance(v, int) or float(v).is_integer():
        return str(int(v))
    return repr(float(v))


if __name__ == "__main__":
    main()
