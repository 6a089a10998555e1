"""Smoke test for the bvoigt_py extension module.

Build and install first, e.g.
    pip install --no-build-isolation ./crates/python
then run
    python python/smoke_test.py
"""

import math
import os
import tempfile

import bvoigt_py as bv


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL: {what}")
    print(f"ok   {what}")


def main():
    grid = bv.Grid(2, 32)
    check((grid.dim, grid.n) == (2, 32), "grid construction")
    check("taylor_green" in bv.IC_NAMES, "initial-condition catalog exported")

    params = bv.ModelParams(2, nu=1e-3, kappa=1e-3, alpha=0.1)
    state = bv.initial_condition("taylor_green", grid, 0.5, 0.5)
    check(len(state.velocity()) == 2 and len(state.theta()) == 32 * 32, "physical samples")

    d0 = state.diagnostics(params)
    check(d0["voigt_energy"] > 0.0, "diagnostics at the initial state")

    one = bv.step(state, params, 1e-3)
    check(abs(one.t - 1e-3) < 1e-15, "single step advances time")

    final, records = bv.integrate(state, params, 0.1, dt=2e-3, output_every=10)
    check(abs(final.t - 0.1) < 1e-12 and len(records) == 6, "fixed-step integration")
    check(all(math.isfinite(r["voigt_energy"]) for r in records), "finite records")
    check(records[-1]["l2_theta"] <= records[0]["l2_theta"], "scalar L2 norm does not grow")
    check(max(r["energy_budget_residual"] for r in records) < 1e-6, "energy budget closes")

    try:
        bv.ModelParams(2, nu=1e-3, alpha=-1.0)
    except ValueError:
        check(True, "invalid parameters raise ValueError")
    else:
        check(False, "invalid parameters raise ValueError")

    with tempfile.TemporaryDirectory() as tmp:
        cfg = os.path.join(tmp, "run.cfg")
        with open(cfg, "w") as f:
            f.write(
                "[grid]\ndim = 2\nn = 16\n[model]\nnu = 1e-3\nkappa = 1e-3\n"
                "[stepper]\ndt = 2e-3\nt_end = 0.04\noutput_every = 5\n"
                "[output]\nsnapshot_every = 10\n"
            )
        out = os.path.join(tmp, "out")
        full = bv.run_config(cfg, out)
        check(os.path.exists(os.path.join(out, "final.bvs")), "config run writes snapshots")
        again = bv.resume(os.path.join(out, "snapshot_00000010.bvs"), 0.04)
        check(again == full[-len(again):], "resume reproduces the tail of the run")

    print("smoke test passed")


if __name__ == "__main__":
    main()
