"""Smoke test for the pysinelike extension module.

Build and install first, e.g.

    pip install maturin
    maturin develop --release -m crates/python/Cargo.toml

then run ``python python/smoke_test.py``.
"""

import json
import math

import pysinelike as sl


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    data = sl.builtin_series()
    assert len(data) == 34
    train = data.select(1990, 2021)

    fit = sl.fit_sl(train)
    close(fit.lambda_, -0.03828096, 1e-5)
    close(fit.sigma, 0.0673062, 1e-4)
    close(fit.aic, 112.3892, 0.1)
    assert fit.converged
    assert json.loads(fit.to_json())["n_transitions"] == 31

    rows = sl.estimated_trends(fit, data.select(1990, 2023), [2022, 2023])
    (t22, emf22, ecmf22, lo22, hi22), (_, emf23, ecmf23, _, _) = rows
    close(emf22, 41.67541, 5e-4)
    close(emf23, 43.34456, 5e-4)
    close(ecmf22, 38.84946, 5e-4)
    close(ecmf23, 40.26646, 5e-4)
    assert lo22 < emf22 < hi22

    g = sl.fit_gompertz(train)
    assert fit.aic < g[4]

    params = fit.params
    predicted = [sl.mean_function(params, 1990, train.values[0], t) for t in train.times]
    acc = sl.accuracy(train.values, predicted)
    close(acc["mae"], 1.718274, 1e-3)
    assert acc["rmse"] >= acc["mae"]
    assert acc["classification"] == "high"

    times, paths = sl.simulate_paths(params.lambda_, params.sigma, 1990, 11.85815, 0.066, 500, 10, seed=3)
    assert len(times) == 501 and len(paths) == 10
    assert all(p[0] == 11.85815 and min(p) > 0 for p in paths)

    try:
        sl.SlParams(0.0, 0.1)
    except sl.SineLikeError:
        pass
    else:
        raise AssertionError("lambda = 0 must be rejected")

    code, out, _ = sl.run_cli(["forecast", "--train", "1990:2021", "--horizon", "2022,2023"])
    assert code == 0 and out.splitlines()[0] == "t,emf,ecmf,lower,upper"

    logpdf = sl.transition_logpdf(params, 1990, 1991, 11.85815, 12.0)
    assert math.isfinite(logpdf)
    print("pysinelike smoke test passed")


if __name__ == "__main__":
    main()
