#!/usr/bin/env python3
"""Smoke test for the gpata_py extension module.

Build the module first, then run this script from the repository root:

    cargo build -p gpata-python --release
    python3 python/smoke_test.py
"""

import os
import sys
import tempfile

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def import_extension():
    """Symlink the built cdylib under the importable module name."""
    for profile in ("release", "debug"):
        built = os.path.join(REPO, "target", profile, "libgpata_py.so")
        if os.path.exists(built):
            link_dir = tempfile.mkdtemp(prefix="gpata_py_")
            os.symlink(built, os.path.join(link_dir, "gpata_py.so"))
            sys.path.insert(0, link_dir)
            import gpata_py

            return gpata_py
    sys.exit("build the module first: cargo build -p gpata-python --release")


def main():
    gp = import_extension()

    scenario = gp.Scenario.load(os.path.join(REPO, "scenarios", "reference.toml"))
    assert scenario.device_count == 15 and scenario.server_count == 3, repr(scenario)
    short = scenario.with_cycles(5)

    # determinism: identical runs, identical aggregates
    first = gp.run(short, "gpata")
    second = gp.run(short, "gpata")
    assert first.dhr == second.dhr and first.total_payoff == second.total_payoff
    assert 0.0 <= first.dhr <= 1.0
    assert first.tasks_total == 5 * scenario.tasks_per_cycle
    assert len(first.device_payoffs()) == 15

    # a different seed must change something
    other = gp.run(short.with_seed(7), "gpata")
    assert (other.dhr, other.total_payoff) != (first.dhr, first.total_payoff)

    # every scheme runs on the same scenario
    for scheme in gp.SCHEMES:
        stats = gp.run(short, scheme)
        assert 0.0 <= stats.dhr <= 1.0, f"{scheme}: dhr {stats.dhr}"

    # replayed hit rate grows with the deadline
    curve = gp.dhr_curve(short, "gpata", [0.5, 1.0, 2.0, 4.0, 8.0])
    assert all(a <= b for a, b in zip(curve, curve[1:])), curve

    # pure helpers
    assert gp.deadline_indicator(5.0, 4.0) == 1
    assert gp.deadline_indicator(4.0, 4.0) == 0
    assert gp.quality_score(2.0, 0.5, 0.0, 1.0, 0.0) == 1.0

    # invalid inputs surface as ValueError
    try:
        gp.run(short, "oracle")
    except ValueError:
        pass
    else:
        sys.exit("unknown scheme should raise ValueError")

    print(f"smoke test OK: {first!r}")


if __name__ == "__main__":
    main()
