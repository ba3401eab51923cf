"""Smoke test for the Python bindings.

Build the extension and put it on the path, e.g.

    cargo build --release -p gasketpile-python --features extension-module
    cp target/release/libpygasketpile.so python/pygasketpile.so
    python3 python/smoke_test.py
"""

import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pygasketpile as gp


def main():
    g = gp.GasketGraph(2)
    assert len(g) == 15
    assert g.boundary == "normal"

    e = gp.identity(g)
    assert gp.is_recurrent(e)
    assert set(e.chips) == {2, 3}
    assert e == gp.build_identity_theorem(2)
    assert gp.oplus(e, e) == e

    c = gp.Configuration.parse("0 normal 5 7 2")
    stable, odometer = gp.stabilize(c)
    assert stable.is_stable() and sum(odometer) > 0
    assert gp.Configuration.parse(stable.to_json()) == stable

    assert gp.build_m(1, 2, 1, 1).chips == [2, 3, 1, 3, 2, 1]
    assert gp.verify("doubling", 2)["gain"] == 34
    assert gp.verify("transport", 2)["pass"]
    assert gp.verify("junction", 2)["pass"]

    assert gp.group_order(gp.GasketGraph(0)) == 50
    assert gp.invariant_factors(gp.GasketGraph(0)) == [5, 10]
    assert gp.tau_recursion(2) == 524880 == gp.tau_matrix_tree(2)
    assert gp.check_group_theorem(2)["pass"]

    assert gp.h1_eigenvalue(2, 1) == (5, 8)
    d = gp.exact_distance(0, 0)
    assert abs(d["l2"] ** 2 - 49 / 50) < 1e-12
    assert gp.distinguishing_statistic(e) == 1.0

    sim = gp.simulate(2, 10, seed=3, trials=8)
    assert sim == gp.simulate(2, 10, seed=3, trials=8)
    assert gp.is_recurrent(gp.Configuration.parse(
        "2 normal " + " ".join(map(str, sim["final_config"]["chips"]))))
    assert gp.is_recurrent(gp.sample_stationary(g, 1))
    assert gp.recurrent_rep(g, [0] * 15) == e
    assert gp.mixing_report(3)["lower_bound_t"] == 0.0

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "id2.ppm")
        gp.render_to(e, path)
        with open(path, "rb") as f:
            assert f.read(2) == b"P6"

    try:
        gp.Configuration.parse("0 normal 1 2")
    except ValueError:
        pass
    else:
        raise AssertionError("length mismatch accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
