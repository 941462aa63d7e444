"""Independent transcription of the benchmark suite used to freeze
benchmark_golden.json. Objectives are negated from their minimization
sources (maximization convention); constraints are slacks, feasible when
non-negative. Run once; the JSON is committed as regression data.
"""
import json
import math

import numpy as np

SQ2 = math.sqrt(2.0)


def vlmop2(x):
    a = 1.0 / SQ2
    f1 = 1.0 - math.exp(-sum((xi - a) ** 2 for xi in x))
    f2 = 1.0 - math.exp(-sum((xi + a) ** 2 for xi in x))
    return [-f1, -f2]


def branin(u, v):
    return (v - 5.1 * u * u / (4 * math.pi ** 2) + 5 * u / math.pi - 6) ** 2 \
        + 10 * (1 - 1 / (8 * math.pi)) * math.cos(u) + 10


def currin(x1, x2):
    factor = 1.0 if x2 == 0.0 else 1.0 - math.exp(-1.0 / (2.0 * x2))
    num = 2300 * x1 ** 3 + 1900 * x1 ** 2 + 2092 * x1 + 60
    den = 100 * x1 ** 3 + 500 * x1 ** 2 + 4 * x1 + 20
    return factor * num / den


def branincurrin(x):
    u, v = 15 * x[0] - 5, 15 * x[1]
    return [-branin(u, v), -currin(x[0], x[1])]


def c_branincurrin(x):
    u, v = 15 * x[0] - 5, 15 * x[1]
    return branincurrin(x) + [50.0 - (u - 2.5) ** 2 - (v - 7.5) ** 2]


def zdt1(x):
    d = len(x)
    g = 1 + 9 * sum(x[1:]) / (d - 1)
    return [-x[0], -(g * (1 - math.sqrt(x[0] / g)))]


def zdt2(x):
    d = len(x)
    g = 1 + 9 * sum(x[1:]) / (d - 1)
    return [-x[0], -(g * (1 - (x[0] / g) ** 2))]


def four_bar_truss(x):
    F, E, L = 10.0, 2e5, 200.0
    x1, x2, x3, x4 = x
    f1 = L * (2 * x1 + SQ2 * x2 + math.sqrt(x3) + x4)
    f2 = (F * L / E) * (2 / x1 + 2 * SQ2 / x2 - 2 * SQ2 / x3 + 2 / x4)
    return [-f1, -f2]


def constr_ex(x):
    x1, x2 = x
    return [-x1, -((1 + x2) / x1), x2 + 9 * x1 - 6, -x2 + 9 * x1 - 1]


def srn(x):
    x1, x2 = x
    f1 = 2 + (x1 - 2) ** 2 + (x2 - 1) ** 2
    f2 = 9 * x1 - (x2 - 1) ** 2
    return [-f1, -f2, 225 - x1 ** 2 - x2 ** 2, 3 * x2 - x1 - 10]


def c2dtlz2(x):
    r = 0.2
    g = sum((xi - 0.5) ** 2 for xi in x[1:])
    f1 = (1 + g) * math.cos(x[0] * math.pi / 2)
    f2 = (1 + g) * math.sin(x[0] * math.pi / 2)
    t1 = min((f1 - 1) ** 2 + f2 ** 2, (f2 - 1) ** 2 + f1 ** 2) - r * r
    t2 = (f1 - 1 / SQ2) ** 2 + (f2 - 1 / SQ2) ** 2 - r * r
    return [-f1, -f2, -min(t1, t2)]


def disc_brake(x):
    x1, x2, x3, x4 = x
    f1 = 4.9e-5 * (x2 ** 2 - x1 ** 2) * (x4 - 1)
    f2 = 9.82e6 * (x2 ** 2 - x1 ** 2) / (x3 * x4 * (x2 ** 3 - x1 ** 3))
    g1 = (x2 - x1) - 20.0
    g2 = 0.4 - x3 / (3.14 * (x2 ** 2 - x1 ** 2))
    g3 = 1.0 - (2.22e-3 * x3 * (x2 ** 3 - x1 ** 3)) / (x2 ** 2 - x1 ** 2) ** 2
    g4 = (2.66e-2 * x3 * x4 * (x2 ** 3 - x1 ** 3)) / (x2 ** 2 - x1 ** 2) - 900.0
    return [-f1, -f2, g1, g2, g3, g4]


PROBLEMS = {
    "vlmop2": (vlmop2, [(-2.0, 2.0)] * 2),
    "branincurrin": (branincurrin, [(0.0, 1.0)] * 2),
    "zdt1": (zdt1, [(0.0, 1.0)] * 5),
    "zdt2": (zdt2, [(0.0, 1.0)] * 5),
    "fourbartruss": (four_bar_truss, [(1.0, 3.0), (SQ2, 3.0), (SQ2, 3.0), (1.0, 3.0)]),
    "c-branincurrin": (c_branincurrin, [(0.0, 1.0)] * 2),
    "constr-ex": (constr_ex, [(0.1, 1.0), (0.0, 5.0)]),
    "srn": (srn, [(-20.0, 20.0)] * 2),
    "c2-dtlz2": (c2dtlz2, [(0.0, 1.0)] * 4),
    "discbrake": (disc_brake, [(55.0, 80.0), (75.0, 110.0), (1000.0, 3000.0), (11.0, 20.0)]),
}


def main():
    rng = np.random.default_rng(987654321)
    golden = {}
    for name, (fn, bounds) in PROBLEMS.items():
        cases = []
        for _ in range(20):
            x = [float(lo + (hi - lo) * rng.random()) for lo, hi in bounds]
            cases.append({"x": x, "y": [float(v) for v in fn(x)]})
        golden[name] = cases
    with open("benchmark_golden.json", "w") as f:
        json.dump(golden, f, indent=1, sort_keys=True)


if __name__ == "__main__":
    main()
