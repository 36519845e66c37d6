"""Smoke test for the `brp` extension module.

Build and import:
    cargo build -p brp-py --features extension-module --release
    cp target/release/libbrp.so python/brp.so
    python3 python/smoke_test.py
"""

import json
import math
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

import brp  # noqa: E402

FORM = {
    "d": 2,
    "e": 1,
    "gamma": 2.5,
    "components": [
        [{"monomial": [0, 0], "coeff": 1}, {"monomial": [0, 1], "coeff": "1/2"}, {"monomial": [2, 0], "coeff": "-1/3"}],
        [{"monomial": [1, 0], "coeff": "1/2"}, {"monomial": [1, 1], "coeff": "1/4"}],
    ],
}


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    n = 256
    times = [k / n for k in range(n + 1)]
    pts = [[math.sin(2 * math.pi * t), t * t] for t in times]

    x = brp.Path.canonical(times, pts, 2.0)
    assert len(x) == n + 1 and x.d == 2
    inc = x.increment(0, n)
    # geometric lift: (X,[1]1) = (x^1_{0,1})^2 / 2
    close(inc["1(1)"], inc["1"] ** 2 / 2, 1e-12)
    again = brp.Path.from_json(x.to_json())
    for key, value in x.increment(3, 17).items():
        close(again.increment(3, 17)[key], value, 1e-14)

    f = brp.OneForm.from_json(json.dumps(FORM))
    y = brp.integrate(f, x)
    assert y["gap"] < 1e-3
    yp = brp.integral_path(f, x)
    close(yp.increment(0, n)["1"], y["finest_sums"]["1"], 1e-10)

    ito = brp.Path.ito(times, pts, 2.0, scale=1.0)
    close(ito.increment(0, n)["1(1)"] - inc["1(1)"], -0.5, 1e-12)
    assert brp.dp_metric(x, x) == 0.0
    assert brp.dp_metric(x, ito) > 0.0

    cmp = brp.compare_first_levels(f, ito)
    assert cmp["gap"] < 1e-4, cmp

    assert len(brp.generators(2, 2)) == 5
    assert len(brp.generators(1, 2)) == 2
    report = json.loads(brp.verify_algebra(2, 3, 10, 7))
    assert report["passed"], report

    line = lambda t: [[s] for s in t]
    mono = brp.Path.canonical([0.0, 0.5, 1.0], line([0.0, 1.0, 3.0]), 1.0)
    close(mono.p_variation(), 3.0, 1e-12)
    print("brp smoke test passed:", x, f"integral level one {y['value']['1']:.6f}")


if __name__ == "__main__":
    main()
