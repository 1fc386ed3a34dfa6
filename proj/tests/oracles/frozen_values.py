"""High-precision reference values frozen into the C++ unit tests.

Run with `python3 tests/oracles/frozen_values.py`; the printed values are the
ones asserted in tests/unit/*.cpp.
"""
from mpmath import mp, mpf, exp, sqrt

mp.dps = 50


def cosine_distance(a, b):
    dot = sum(mpf(x) * mpf(y) for x, y in zip(a, b))
    na = sqrt(sum(mpf(x) ** 2 for x in a))
    nb = sqrt(sum(mpf(y) ** 2 for y in b))
    return 1 - dot / (na * nb)


def min_max(xs):
    xs = [mpf(x) for x in xs]
    lo, hi = min(xs), max(xs)
    return [(x - lo) / (hi - lo) for x in xs]


def softmax_one_minus(ds):
    es = [exp(1 - mpf(d)) for d in ds]
    s = sum(es)
    return [e / s for e in es]


print("cosine (1,1,0) vs (1,0,0):", mp.nstr(cosine_distance([1, 1, 0], [1, 0, 0]), 20))
print("min-max (0.2,0.4,0.6):", [mp.nstr(v, 20) for v in min_max(["0.2", "0.4", "0.6"])])
print("softmax (0,0.5,1):", [mp.nstr(v, 20) for v in softmax_one_minus([0, "0.5", 1])])
print("top-3 of (0,0.1,0.2,0.9,1):", [mp.nstr(v, 20) for v in softmax_one_minus([0, "0.1", "0.2"])])
print("threshold 0.33 on (0.5,0.7): similarities", [mp.nstr(1 - mpf(d), 5) for d in ("0.5", "0.7")],
      "keep", [1 - mpf(d) > mpf("0.33") for d in ("0.5", "0.7")])
print("aggregate 0.25*2 + 0.75*4:", mpf("0.25") * 2 + mpf("0.75") * 4)

proxy = [mpf("0.5"), mpf("-1.25"), mpf(2), mpf(3)]
oracle = [mpf("1.5"), mpf("0.25"), mpf(-1), mpf("3.5")]
print("param_l2 of a 4-element gap:", mp.nstr(sqrt(sum((p - o) ** 2 for p, o in zip(proxy, oracle))), 20))
bias_gap = [mpf("0.5"), mpf("-1.5")]
print("functional_mse of a pure bias gap:", mp.nstr(sum(g ** 2 for g in bias_gap) / len(bias_gap), 20))
