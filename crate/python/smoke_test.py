"""Smoke test for the pyirsopt bindings. Run after `pip install --no-build-isolation .`."""

import math

import numpy as np

import pyirsopt as irs

SMALL = """
seed = 7
trials = 2

[system]
bs_antennas = 4
irs_units = 1
elements_per_unit = 8
users = 2
streams = 2

[ao]
max_iters = 30

[pso]
swarm = 6
iterations = 5
batches = 5
batch_size = 4

[sumrate]
elements = [4, 8]
bits = [1]

[rank]
max_units = 2

[aasr]
rho = [0.0, 1.0]
evaluation_frames = 2
"""


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def check_scalars():
    assert abs(irs.dbm_to_watts(30.0) - 1.0) < 1e-12
    assert abs(irs.bessel_j0(0.0) - 1.0) < 1e-12
    assert irs.flops_f1(4, 2, 8, 2) > 0
    p = irs.water_filling([1.0, 2.0, 4.0], 1.0, 3.0)
    assert abs(sum(p) - 3.0) < 1e-9 and min(p) >= 0.0


def check_reflection():
    incident = [0.3, -1.2, 2.0, 0.5]
    departure = [1.0, 0.1, -0.4, 2.2]
    phases = irs.optimal_pattern(incident, departure)
    assert abs(irs.array_gain(phases, incident, departure) - len(phases) ** 2) < 1e-9
    q = irs.quantize(phases, 1)
    assert len(q) == len(phases)


def check_solvers():
    rng = np.random.default_rng(3)
    n = 10
    x = crandn(rng, n, n)
    a = (x @ x.conj().T / n).tolist()
    b = crandn(rng, n).tolist()
    theta_d, f_d = irs.solve_dual(a, b)
    theta_u, f_u = irs.solve_ucmo(a, b)
    assert np.allclose(np.abs(theta_d), 1.0) and np.allclose(np.abs(theta_u), 1.0)
    assert abs(f_d - f_u) <= 0.01 * max(abs(f_d), abs(f_u))
    assert abs(irs.quadratic_objective(a, b, theta_d) - f_d) < 1e-9


def check_ao():
    rng = np.random.default_rng(5)
    g = crandn(rng, 4, 8).tolist()
    h = crandn(rng, 8, 2).tolist()
    r = irs.run_ao([(g, h)], power=10.0, max_iters=50)
    assert r.sum_rate > 0.0
    assert all(b >= a - 1e-9 * max(abs(a), 1.0) for a, b in zip(r.trace, r.trace[1:]))


def check_experiments():
    cfg = irs.ScenarioConfig.from_toml(SMALL)
    assert cfg.seed == 7 and cfg.trials == 2
    for name in ["sumrate", "rank", "aasr", "ao-trace"]:
        one = irs.run_experiment(name, cfg, threads=1)
        two = irs.run_experiment(name, cfg, threads=2)
        assert one.csv == two.csv, name
        assert one.rows and not one.violations, name
        assert one.csv.splitlines()[1] == "sweep_var,value,scheme,mean,stderr,trials"


if __name__ == "__main__":
    check_scalars()
    check_reflection()
    check_solvers()
    check_ao()
    check_experiments()
    print("pyirsopt smoke test passed")
