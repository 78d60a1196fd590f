"""Smoke test for the compiled extension: python python/smoke_test.py"""

import math

import curvebpe


def main():
    circle = curvebpe.Measure.uniform_circle(128)
    assert len(circle) == 128 and circle.dim == 1
    assert abs(circle.total_mass - 2 * math.pi) < 1e-12

    rep = curvebpe.bpe_sequence(circle, [0.5 + 0j], 0, 30)
    assert rep["classification"] == "bounded"
    c = rep["constants"][-1]
    assert abs(c * c - 1 / (2 * math.pi * 0.75)) < 1e-6

    hyper = curvebpe.Map.hyperbola()
    mu = curvebpe.pushforward(circle, hyper)
    nu, dropped = curvebpe.pullback(mu, hyper)
    assert dropped == 0.0
    assert max(abs(a[0] - b[0]) for a, b in zip(nu.nodes, circle.nodes)) < 1e-12
    rep = curvebpe.bpe_sequence(mu, hyper(1.0), 0, 30)
    assert rep["classification"] == "divergent"

    cusp = curvebpe.Map.monomial([2, 3])
    assert cusp.pullback_codimension(20)["codimension"] == 1
    assert curvebpe.Map.from_json(cusp.to_json())(2.0) == [4, 8]

    ellipse = curvebpe.project(mu, 2.0)
    assert abs(ellipse.nodes[0][0] - 3.0) < 1e-12

    report = curvebpe.analyze_preset("circle", 20, grid=(-1.5, 1.5, 12))
    assert report["consistent"] and report["scan"]["bounded_components"]

    blocks = curvebpe.block_summary(circle, 10)
    assert abs(blocks["norm_s"] - 1.0) < 1e-10
    ws = curvebpe.witness(circle, [0.5], [10, 20])
    assert ws[1]["residual"] < ws[0]["residual"]

    try:
        curvebpe.bpe_sequence(curvebpe.Measure.uniform_circle(16), [0j], 0, 10)
    except RuntimeError as e:
        assert "quadrature" in str(e).lower() or "exactness" in str(e).lower(), e
    else:
        raise AssertionError("coarse quadrature must fail")

    print("smoke test passed")


if __name__ == "__main__":
    main()
