"""Smoke test for the compiled `fraclab` module.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`,
then run `python crates/py/python/smoke_test.py`.
"""

import json
import math

import fraclab


def close(a, b, rtol=1e-12):
    return abs(a - b) <= rtol * abs(b)


def main():
    c = fraclab.constants(2, 2.0, 0.75)
    assert c["params"] == {"N": 2, "p": 2.0, "s": 0.75}
    assert c["q"] == 8.0
    assert close(c["sphere_surface"], 2 * math.pi)
    assert close(fraclab.hardy_constant(2, 2.0, 0.75), c["hardy_const"])

    # no Hardy constant when ps <= 1
    assert fraclab.constants(2, 2.0, 0.4)["hardy_const"] is None
    try:
        fraclab.hardy_constant(2, 2.0, 1.5)
    except ValueError as e:
        assert "0<s<1" in str(e)
    else:
        raise AssertionError("s = 1.5 accepted")

    w = [fraclab.remainder_potential_w(x, 2.0, 0.75) for x in (1e-4, 0.5, 0.9)]
    assert all(v > 0 and math.isfinite(v) for v in w)

    ball = json.dumps({"kind": "ball", "center": [0.0, 0.0], "radius": 1.0})
    m = fraclab.pseudodistance(ball, [0.5, 0.0], 1.5)
    assert 0 < m <= 0.5 * (1 + 1e-9)

    report = fraclab.run_config(json.dumps({
        "command": "verify-hardy",
        "quad": {"resolution": 24},
        "trials": {"count": 2, "seed": 3},
    }))
    assert report["command"] == "verify-hardy"
    assert report["passed"], report["violations"]
    assert len(report["result"]) == 2
    assert len(report["provenance"]["config_hash"]) == 64

    try:
        fraclab.run_config(json.dumps({"command": "constants", "typo": 1}))
    except ValueError:
        pass
    else:
        raise AssertionError("unknown key accepted")

    print(f"fraclab {fraclab.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
