"""Smoke test for the relaxed_control_py extension."""

import sys

import relaxed_control_py as rc


def main() -> int:
    assert rc.benchmarks() == ["double-tank", "hybrid-lqr", "mobile-network"]

    j0 = rc.initial_cost("double-tank", 0.01)
    assert abs(j0 - 50.5457) <= 0.002 * 50.5457, j0

    s = rc.solve("hybrid-lqr", dt=0.01, iters=20, mode="general", pwm_cycle_steps=12)
    assert s.initial_cost == 3.0
    assert s.final_cost <= 5e-3, s
    assert s.projected_cost <= 6e-3, s
    assert all(abs(v - 1.0) <= 0.01 for v in s.final_state), s.final_state
    assert all(b <= a for a, b in zip(s.costs, s.costs[1:]))
    assert all(t <= 0.0 for t in s.thetas)

    failed = [c for c in rc.check("mobile-network") if not c[1]]
    assert not failed, failed

    try:
        rc.solve("triple-tank")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown problem accepted")

    print(s)
    print("smoke ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
