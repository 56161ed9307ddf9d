"""Smoke test for the sgks extension module.

Build and run from the workspace root:

    cargo build -p sgks-py --release
    cp target/release/libsgks_py.so crates/python/python/sgks.so
    python3 crates/python/python/smoke_test.py
"""

import math

import sgks


def main():
    assert abs(sgks.hermite(2, 1.0)) < 1e-12
    assert abs(sgks.wick_eval({1: 1, 2: 1}, [2.0, 3.0]) - 6.0) < 1e-12
    assert sgks.product_coeff({1: 2}, {1: 1}, {}) > 1.0

    scheme = sgks.TruncationScheme(4, 6)
    assert len(scheme) == 7
    assert scheme.enumerate()[0] == {}
    assert scheme.convolution_terms({1: 1})

    d = sgks.sample_driver(3, 3.0, 20)
    assert len(d.xi) == 20
    assert d.brownian_at(0.0) == 0.0
    assert d.truncated(5).xi == d.xi[:5]

    p = sgks.Problem.builtin("tp1")
    p.set_sigma(0.5)
    assert p.stability_ratio() <= 0.15
    fields = sgks.solve(p, scheme)
    u = fields[-1].reconstruct(d.truncated(6).xi)
    mean, var = fields[-1].moments()
    assert len(u) == len(p.nodes()) == len(mean) == len(var)
    assert all(math.isfinite(x) for x in u)

    ref = sgks.transform_solve(p, d)
    assert len(ref["u"]) == len(ref["times"])

    lin = sgks.Problem.builtin("linear_test")
    assert lin.is_complex
    v = sgks.langevin_semianalytic(lin.kappa, lin.eta, lin.nu, 1, d, lin.dt)
    assert isinstance(v[-1], complex)

    errs = sgks.realize(sgks.Problem.builtin("tp2"), scheme, 1)
    print("tp2 seed 1 max_rel", errs["max_rel"])

    try:
        sgks.Problem.builtin("tp9")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown problem accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
