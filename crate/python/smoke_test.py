"""Smoke test for the zklab Python bindings.

Build and install first:  pip install -e crates/py --no-build-isolation
"""

import json
import math
import sys
import tempfile
from pathlib import Path

import zklab_py as zk


def check(name, cond, detail=""):
    print(f"{'ok  ' if cond else 'FAIL'} {name} {detail}")
    return cond


def main():
    results = []

    results.append(check("phase", zk.phase(1.0, 2) == 5.0 and zk.phase(-1.0, -2) == -5.0))
    results.append(check("dilated norm", math.isclose(zk.dilated_norm(1.0, 1), 2.0)))
    total = sum(zk.shell_weight(2**e, 37.0) for e in range(12))
    results.append(check("partition of unity", abs(total - 1.0) < 1e-12, f"sum {total}"))

    ids = zk.check_identities(200, seed=5)
    results.append(check("identities", ids["exact"], str(ids)))

    exact = zk.measure_b(2.0, 3, -4.0, 10.0, 4, 4)
    est, se = zk.mc_measure(2.0, 3, -4.0, 10.0, 4, 4, samples=200_000, seed=1)
    results.append(check("measure vs MC", abs(exact - est) <= 4 * se + 1e-12, f"{exact:.4f} vs {est:.4f} +- {se:.4f}"))

    ce = [zk.counterexample_norms(n, -0.25) for n in (4, 64)]
    slope = math.log(ce[1]["xsb"] / ce[0]["xsb"]) / math.log(16)
    results.append(check("counterexample slope", abs(slope + 0.25) < 0.05, f"{slope:.3f}"))

    sw = zk.sweep("L4-main", [4, 8, 16, 32], samples=20, seed=3)
    results.append(check("L4-main sweep", sw["slope"] <= 0.10, f"slope {sw['slope']:.3f}"))

    sim = zk.simulate(k=1, dt=1e-2, T=0.2, grid=(32, 16, 16.0))
    results.append(check("simulate", sim["mass_drift"] < 1e-8, f"mass drift {sim['mass_drift']:.1e}"))

    try:
        zk.sweep("L4-main", [4, 8, 16, 32], samples=20, eps=0.5)
        results.append(check("bad eps rejected", False))
    except ValueError as e:
        results.append(check("bad eps rejected", True, str(e)))

    with tempfile.TemporaryDirectory() as out:
        cfg = 'seed = 9\n[identities]\nsamples = 50\n[counterexample]\ns = [0.0]\nN = [4, 8]\n'
        manifest = json.loads(zk.run(cfg, out))
        listed = {f["path"] for f in manifest["files"]}
        on_disk = {p.name for p in Path(out).glob("*.csv")}
        results.append(check("run + manifest", bool(on_disk) and on_disk <= listed, str(sorted(listed))))

    print(f"{sum(results)}/{len(results)} checks passed")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
