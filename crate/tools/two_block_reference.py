"""Generate the two-block box scenario files and reference block values.

The input bounds are smooth functions of s sampled on the K+1 grid points.
Reference values solve the per-block problem

    min  <c_j, y> + sum_k w_k mu_k |<y, xi(s_k)>|   s.t.  ||y||_2 <= 1

with cvxpy, written directly from the support-function formula rather than
from the Rust transcription.

    python3 tools/two_block_reference.py [--write DIR]
"""

import argparse
import json
import math

import cvxpy as cp
import numpy as np

T = 2.0
R = (3, 2)
X0_A = [0.5, 0.0, 0.0, 0.0, 0.0]
X0_B = [0.0, 0.0, 0.0, 5.0, 0.0]


def bounds(s):
    """(alpha, beta) for agents A and B, one row per input block."""
    h = math.pi * s / T
    a = (
        [-2.0 + 0.3 * math.sin(h), -2.126 + 0.2 * math.sin(2 * h)],
        [2.0 + 0.25 * math.cos(h), 1.926 + 0.3 * math.sin(h)],
    )
    b = (
        [-2.2 + 0.4 * math.sin(h), -2.226 - 0.25 * math.sin(h)],
        [1.8 + 0.3 * math.cos(h), 2.026 + 0.1 * math.cos(2 * h)],
    )
    return a, b


def sampled(k):
    s = np.linspace(0.0, T, k + 1)
    s[-1] = T
    out = {"A": ([[], []], [[], []]), "B": ([[], []], [[], []])}
    for si in s:
        a, b = bounds(si)
        for tag, (lo, hi) in (("A", a), ("B", b)):
            for j in range(2):
                out[tag][0][j].append(lo[j])
                out[tag][1][j].append(hi[j])
    return s, out


def xi(r, s):
    return np.array([s ** (r - 1 - a) / math.factorial(r - 1 - a) for a in range(r)])


def block_exp(r, s):
    e = np.zeros((r, r))
    for a in range(r):
        for b in range(a, r):
            e[a, b] = s ** (b - a) / math.factorial(b - a)
    return e


def block_value(k, j):
    s, data = sampled(k)
    r = R[j]
    off = sum(R[:j])
    w = np.full(k + 1, T / k)
    w[0] *= 0.5
    w[-1] *= 0.5
    la, ha = np.array(data["A"][0][j]), np.array(data["A"][1][j])
    lb, hb = np.array(data["B"][0][j]), np.array(data["B"][1][j])
    mu = 0.5 * (ha - la) + 0.5 * (hb - lb)
    dnu = 0.5 * (ha + la) - 0.5 * (hb + lb)
    dx = np.array(X0_A[off : off + r]) - np.array(X0_B[off : off + r])
    c = block_exp(r, T) @ dx + sum(w[i] * dnu[i] * xi(r, s[i]) for i in range(k + 1))
    G = np.array([xi(r, si) for si in s])
    y = cp.Variable(r)
    obj = c @ y + cp.sum(cp.multiply(w * mu, cp.abs(G @ y)))
    prob = cp.Problem(cp.Minimize(obj), [cp.norm(y, 2) <= 1])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return prob.value, y.value


def scenario(k):
    _, data = sampled(k)
    agent = lambda tag, x0: {
        "x0": x0,
        "input": {"type": "box", "alpha": data[tag][0], "beta": data[tag][1]},
    }
    return {
        "version": 1,
        "relative_degree": list(R),
        "horizon": T,
        "steps": k,
        "agent_a": agent("A", X0_A),
        "agent_b": agent("B", X0_B),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--write", metavar="DIR")
    args = ap.parse_args()
    for k in (40, 200, 400):
        vals = [block_value(k, j) for j in range(2)]
        print(f"K={k:4d}  p1={vals[0][0]: .10f}  p2={vals[1][0]: .10f}  |y2|={np.linalg.norm(vals[1][1]):.8f}")
        if args.write:
            with open(f"{args.write}/two_block_k{k}.json", "w", encoding="utf-8", newline="\n") as f:
                json.dump(scenario(k), f, indent=1)
                f.write("\n")


if __name__ == "__main__":
    main()
