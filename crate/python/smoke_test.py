"""Smoke test for the displab Python extension.

Build and install first:
    pip install maturin --no-build-isolation
    cd crates/python && maturin develop --release
then run `python python/smoke_test.py`.
"""

import cmath
import math
import tempfile

import displab


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    # plane wave 2e^{ix} under the defocusing Wick cubic flow rotates as e^{3it}
    f = displab.SpectralField.single_mode(1, 8, (1, 0), 2.0)
    state, t, drift = displab.evolve(f, 8, 0.5, dt=1e-3)
    close(t, 0.5, 1e-12)
    close(abs(state.coeff((1, 0)) - 2.0 * cmath.exp(3j * t)), 0.0, 1e-8)
    assert drift < 1e-10

    # free flow is unitary
    g = displab.sample_torus_data(1, 0.5, 64, master_seed=3)
    close(displab.linear_flow(g, 0.3).l2_norm(), g.l2_norm(), 1e-12)
    samples = g.to_grid(288)
    close(math.sqrt(sum(abs(z) ** 2 for z in samples) / len(samples)), g.l2_norm(), 1e-10)

    total = sum(w for _, w in displab.psi_weights((0.37, -1.2), 2))
    close(total, 1.0, 1e-12)

    ce = displab.counterexample_scaling([256, 512, 1024, 2048, 4096], 0.4)
    assert 0.15 <= ce["fit"]["exponent"] <= 0.25, ce["fit"]

    assert displab.count_s(1, 2, [1, 1, 1], ball=True)["count"] == 4
    assert displab.count_s(1, 0, [4, 4, 4])["count"] == 0

    check = displab.lee_inequality_check([cmath.exp(2j * math.pi * 3 * k / 64) for k in range(64)], 4.0)
    assert check["holds"]

    try:
        displab.counterexample_scaling([256, 512, 1024, 2048], 0.7)
    except ValueError:
        pass
    else:
        raise AssertionError("kappa = 0.7 accepted")

    config = '[counterexample]\nkappa = 0.4\nn_list = [256, 512, 1024, 2048]\n'
    config = 'experiment = "counterexample"\n' + config
    assert displab.validate_config(config) == []
    with tempfile.TemporaryDirectory() as out:
        manifest = displab.run_config(config, out)
        assert len(manifest["files"]) == 1 and len(manifest["files"][0]["sha256"]) == 64

    print("displab", displab.__version__, "smoke test ok")


if __name__ == "__main__":
    main()
