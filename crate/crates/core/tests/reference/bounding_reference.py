"""Reference values of the bounding SOCP, modelled directly in cvxpy.

Prints one line per case with the optimal value from two solvers (inf
when infeasible). The CLARABEL values are frozen in
tests/bounding_reference.rs; SCS is a cross-check.

    python3 tests/reference/bounding_reference.py
"""

import math

import cvxpy as cp
import numpy as np


def bound(h, P, u, mu, Pc, R, g_lo, g_hi, s_lo, s_hi, a_lo, a_hi, delta, solver):
    h = np.asarray(h, dtype=complex)
    K, M = h.shape
    pc = cp.Variable(M, complex=True)
    p = [cp.Variable(M, complex=True) for _ in range(K)]
    c = cp.Variable(K)
    g = cp.Variable(K)  # log2(1 + gamma_p)
    s = cp.Variable()  # log2(1 + s)
    d = cp.Variable(K)  # d[0] unused
    t = cp.Variable()
    hh = [np.conj(h[k]) for k in range(K)]
    gain = lambda k, x: hh[k] @ x
    cons = []
    for k in range(K):
        others = [gain(k, p[j]) for j in range(K) if j != k]
        cons += [
            math.sqrt(g_lo[k]) * cp.norm(cp.hstack(others + [1.0])) <= t + cp.real(gain(k, p[k])),
            cp.imag(gain(k, p[k])) == 0,
            cp.real(gain(k, p[k])) >= 0,
        ]
    every = lambda k: cp.norm(cp.hstack([gain(k, p[j]) for j in range(K)] + [1.0]))
    cons += [
        math.sqrt(s_lo) * every(0) <= t + cp.real(gain(0, pc)),
        cp.imag(gain(0, pc)) == 0,
        cp.real(gain(0, pc)) >= 0,
    ]
    for k in range(1, K):
        cons += [math.sqrt(s_lo) * every(k) <= t + d[k], d[k] >= 0]
        lo, hi = a_lo[k - 1], a_hi[k - 1]
        if hi - lo <= math.pi:
            e = gain(k, pc)
            a = 0.5 * (math.cos(lo) + math.cos(hi))
            b = 0.5 * (math.sin(lo) + math.sin(hi))
            cons += [
                math.sin(lo) * cp.real(e) - math.cos(lo) * cp.imag(e) <= 0,
                math.sin(hi) * cp.real(e) - math.cos(hi) * cp.imag(e) >= 0,
                a * cp.real(e) + b * cp.imag(e) >= (d[k] - t) * (a * a + b * b),
            ]
    power = cp.sum_squares(pc) + sum(cp.sum_squares(x) for x in p)
    cons += [
        power <= P,
        u @ (c + g) >= delta * (mu * power + Pc),
        cp.sum(c) <= s,
        c >= 0,
        c >= np.asarray(R) - g,
        s >= math.log2(1 + s_lo),
        s <= math.log2(1 + s_hi),
        g >= np.log2(1 + np.asarray(g_lo)),
        g <= np.log2(1 + np.asarray(g_hi)),
    ]
    prob = cp.Problem(cp.Minimize(t), cons)
    prob.solve(solver=solver)
    if prob.status in ("infeasible", "infeasible_inaccurate"):
        return math.inf
    assert prob.status == "optimal", prob.status
    return float(t.value)


ORTH = dict(h=[[1, 0], [0, 1]], P=10.0, u=np.ones(2), mu=0.0, Pc=1.0, R=[0.0, 0.0])
MIXED = dict(
    h=[[0.8 - 0.3j, 0.1 + 0.5j], [-0.4 + 0.9j, 0.6 + 0.2j]],
    P=4.0,
    u=np.array([1.0, 0.7]),
    mu=0.0,
    Pc=1.0,
    R=[0.0, 0.0],
)
EE = dict(
    h=[[0.8 - 0.3j, 0.1 + 0.5j], [-0.4 + 0.9j, 0.6 + 0.2j]],
    P=4.0,
    u=np.ones(2),
    mu=1.0,
    Pc=1.0,
    R=[0.5, 0.2],
)
TAU = 2 * math.pi

CASES = [
    ("orth_root", ORTH, [0, 0], [10, 10], 0, 10, [0], [TAU], 0.0),
    ("orth_upper_half", ORTH, [5, 0], [10, 10], 0, 10, [0], [TAU], 0.0),
    ("orth_inner", ORTH, [2, 1], [6, 5], 0.5, 3, [0], [math.pi / 2], 5.17),
    ("orth_tight", ORTH, [4.5, 4.5], [5.5, 5.5], 0, 0.1, [0], [math.pi], 5.17),
    ("mixed_cut", MIXED, [0.5, 0.2], [2, 1.5], 0.1, 1, [math.pi / 4], [math.pi], 2.0),
    ("mixed_wide", MIXED, [0.5, 0.2], [2, 1.5], 0.1, 1, [0.5], [5.0], 1.0),
    ("ee_floors", EE, [0.2, 0.1], [3, 2], 0, 2, [3.0], [4.5], 0.8),
    ("orth_unreachable", ORTH, [0, 0], [10, 10], 0, 10, [0], [TAU], 20.0),
]

if __name__ == "__main__":
    for name, inst, gl, gh, sl, sh, al, ah, delta in CASES:
        row = []
        for sv in ("CLARABEL", "SCS"):
            try:
                row.append(f"{sv}={bound(**inst, g_lo=gl, g_hi=gh, s_lo=sl, s_hi=sh, a_lo=al, a_hi=ah, delta=delta, solver=sv)!r}")
            except cp.error.SolverError:
                row.append(f"{sv}=failed")
        print(name, *row)
