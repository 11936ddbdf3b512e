#!/usr/bin/env python3
"""Benchmark the compiled kernel against the numpy fallback.

Times the fused per-observation pass (the hot loop of every Newton
iteration) and a complete fit under each backend.

Usage: python3 benchmarks/bench_kernels.py [--n 200000] [--repeats 20]
"""

import argparse
import time

import numpy as np

from svyglm import _kernels
from svyglm._kernels import FAMILY_CODES, LINK_CODES, _numpy
from svyglm.families import Link, family
from svyglm.fit import fit_pseudo_mle
from svyglm.frame import ModelFrame

try:
    from svyglm._kernels import _core
except ImportError:
    _core = None

CASES = [
    ("normal", "identity"),
    ("poisson", "log"),
    ("binomial", "logit"),
    ("gamma", "log"),
]


def make_data(rng, fam_kind, n, p=6):
    X = np.column_stack([np.ones(n), rng.normal(0, 0.4, size=(n, p - 1))])
    beta = np.concatenate([[{"normal": 1.0, "poisson": 0.7, "binomial": -0.4,
                             "gamma": 0.7}[fam_kind]],
                           rng.normal(0, 0.2, p - 1)])
    eta = X @ beta
    if fam_kind == "normal":
        y = eta + rng.normal(size=n)
    elif fam_kind == "poisson":
        y = rng.poisson(np.exp(eta)).astype(float)
    elif fam_kind == "binomial":
        y = (rng.random(n) < 1 / (1 + np.exp(-eta))).astype(float)
    else:
        y = rng.gamma(2.0, np.exp(eta) / 2.0)
    w = rng.uniform(0.5, 2.5, n)
    return X, y, w, eta


def time_pass(impl, fam_kind, link_kind, y, eta, w, repeats):
    n = len(y)
    mu, u, w0, we = (np.empty(n) for _ in range(4))
    args = (FAMILY_CODES[fam_kind], LINK_CODES[link_kind], 0.0, 1.0, 1e-10,
            y, eta, w, mu, u, w0, we)
    impl.glm_pass(*args)  # warm up
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        impl.glm_pass(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def frame_from(X, y, w):
    n, p = X.shape
    return ModelFrame(y=y, X=X, column_labels=tuple(f"b{j}" for j in range(p)),
                      kept_rows=np.arange(n), weights=w,
                      strata=np.array(["0"] * n, dtype=object),
                      psu=np.array([str(i) for i in range(n)], dtype=object),
                      fpc=np.zeros(n))


def time_fit(impl, fam_kind, link_kind, X, y, w, repeats=3):
    fam = family(fam_kind)
    lnk = Link(link_kind)
    frame = frame_from(X, y, w)
    saved = _kernels.glm_pass
    _kernels.glm_pass = impl.glm_pass
    try:
        best = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            fit_pseudo_mle(frame, fam, lnk)
            best = min(best, time.perf_counter() - t0)
        return best
    finally:
        _kernels.glm_pass = saved


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=200_000)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    if _core is None:
        print("compiled kernel not built; run pip install -e . first")
        return

    rng = np.random.default_rng(0)
    print(f"n = {args.n}, best of {args.repeats}\n")
    print(f"{'case':<22} {'numpy pass':>12} {'cython pass':>12} {'speedup':>8}")
    for fam_kind, link_kind in CASES:
        X, y, w, eta = make_data(rng, fam_kind, args.n)
        t_np = time_pass(_numpy, fam_kind, link_kind, y, eta, w, args.repeats)
        t_cy = time_pass(_core, fam_kind, link_kind, y, eta, w, args.repeats)
        label = f"{fam_kind}/{link_kind}"
        print(f"{label:<22} {t_np * 1e3:>10.2f}ms {t_cy * 1e3:>10.2f}ms "
              f"{t_np / t_cy:>7.1f}x")

    print(f"\n{'full fit':<22} {'numpy':>12} {'cython':>12} {'speedup':>8}")
    for fam_kind, link_kind in CASES:
        X, y, w, _ = make_data(rng, fam_kind, args.n)
        t_np = time_fit(_numpy, fam_kind, link_kind, X, y, w)
        t_cy = time_fit(_core, fam_kind, link_kind, X, y, w)
        label = f"{fam_kind}/{link_kind}"
        print(f"{label:<22} {t_np * 1e3:>10.1f}ms {t_cy * 1e3:>10.1f}ms "
              f"{t_np / t_cy:>7.1f}x")


if __name__ == "__main__":
    main()
