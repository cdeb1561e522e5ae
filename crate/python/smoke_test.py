"""Smoke test for the ddtopp extension module.

Build and install first:  pip install ./crates/py  (or `maturin develop -m crates/py/Cargo.toml`)
"""

import math

import ddtopp


def main():
    cfg = ddtopp.Config()
    assert cfg.v_max == 0.6 and cfg.solver["tighten"] is True
    assert ddtopp.Config.from_json(cfg.to_json()) == cfg
    try:
        ddtopp.Config(vmax=1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown key accepted")

    samples = ddtopp.lissajous(0.01)
    assert len(samples) == 10001
    assert abs(samples.x[0]) < 1e-12 and abs(samples.y[0]) < 1e-12

    plan = ddtopp.plan(samples)
    summary = plan.summary()
    assert summary["status"] == "optimal", summary
    for key in ("zeta", "rho", "chi"):
        assert 0.99 <= summary[key] <= 1 + 1e-6, (key, summary[key])
    traj = plan.trajectory
    assert abs(traj.duration - summary["t_f"]) < 1e-9
    assert ddtopp.check(traj, samples) == []
    assert len(traj.slow_regions(0.9 * cfg.v_max)) == 6
    back = ddtopp.Trajectory.from_csv(traj.to_csv())
    assert len(back) == len(traj)

    line = [(0.2 * i, 0.0) for i in range(11)]
    straight = ddtopp.plan(line, ddtopp.Config(v_max=1.0, solver={"max_iter": 200}))
    v = straight.trajectory.v
    assert all(abs(a - b) < 1e-5 for a, b in zip(v, reversed(v)))

    fitted = ddtopp.fit([(0, 0), (1, 0.5), (2, 0), (3, -0.5)], ddtopp.Config(resolution=0.05))
    assert all(math.isfinite(k) for k in fitted.kappa)
    report = ddtopp.oracle(ddtopp.Samples([0, 0.5, 1], [0, 0, 0], [0, 0, 0], [0, 0, 0], 1.0),
                           ddtopp.Config(v_max=10, v_r_min=-100, v_r_max=100, v_l_min=-100, v_l_max=100))
    assert abs(report["t_f_socp"] - 2.0) < 1e-4 and -1e-6 <= report["gap"] <= 0.02, report

    try:
        ddtopp.plan(line, ddtopp.Config(v_s=1.0))
    except ddtopp.InfeasibleError as e:
        assert "start speed" in str(e), e
    else:
        raise AssertionError("fast start accepted")

    print(f"ok: lissajous t_f = {summary['t_f']:.4f} s over {summary['n']} nodes")


if __name__ == "__main__":
    main()
