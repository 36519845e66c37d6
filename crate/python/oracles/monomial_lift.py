"""Exact branched lift of the piecewise-linear interpolation of x_t = (t, t^2).

Writes crates/cli/tests/golden/monomial_lift.json. Tree values are computed
straight from the iterated-integral recursion
    X[tau_1 ... tau_k]_j (0, u) = int_0^u prod_m X[tau_m](0, r) dx^j_r
by exact polynomial integration on each linear piece.
"""

import itertools
import json
import pathlib
from fractions import Fraction

import sympy as sp

STEPS = 4
DEGREE = 3
D = 2
P = 3.2

u = sp.Symbol("u")
times = [sp.Rational(k, STEPS) for k in range(STEPS + 1)]
points = [(t, t**2) for t in times]


def trees(n):
    """Labelled non-planar trees with n vertices, as (label, children) with sorted children."""
    if n == 1:
        return [(j, ()) for j in range(1, D + 1)]
    out = set()
    for j in range(1, D + 1):
        for forest in forests(n - 1):
            out.add((j, forest))
    return sorted(out, key=repr)


def forests(n):
    out = set()
    for first in range(1, n + 1):
        for t in trees(first):
            for rest in forests(n - first) if n > first else [()]:
                out.add(tuple(sorted((t,) + rest, key=repr)))
    return sorted(out, key=repr)


def encode(tree):
    label, children = tree
    if not children:
        return str(label)
    return f"{label}({' '.join(encode(c) for c in children)})"


all_trees = [t for n in range(1, DEGREE + 1) for t in trees(n)]
value_at = {t: [sp.Integer(0)] for t in all_trees}
for k in range(STEPS):
    t0, t1 = times[k], times[k + 1]
    slope = [(points[k + 1][i] - points[k][i]) / (t1 - t0) for i in range(D)]
    local = {}
    for t in all_trees:
        label, children = t
        integrand = sp.Integer(1)
        for c in children:
            integrand *= local[c]
        local[t] = value_at[t][k] + sp.integrate(integrand * slope[label - 1], (u, t0, u))
    for t in all_trees:
        value_at[t].append(sp.nsimplify(local[t].subs(u, t1)))

samples = []
for k, t in enumerate(times):
    samples.append({
        "t": float(t),
        "trees": {encode(tr): str(Fraction(int(sp.numer(value_at[tr][k])), int(sp.denom(value_at[tr][k])))) for tr in all_trees},
    })

golden = {"p": P, "d": D, "steps": STEPS, "samples": samples}
out = pathlib.Path(__file__).resolve().parents[2] / "crates/cli/tests/golden/monomial_lift.json"
out.write_text(json.dumps(golden, indent=2) + "\n")
print(f"wrote {out} ({len(all_trees)} trees)")
