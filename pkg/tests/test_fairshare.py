import json
import math
import subprocess
import sys

import numpy as np
import pytest

from ralp import fairshare


def solve(flows, caps):
    a = np.array([f[0] for f in flows], dtype=np.int64)
    b = np.array([f[1] for f in flows], dtype=np.int64)
    return fairshare.solve_rates(a, b, np.array(caps, dtype=np.float64))


class TestSolver:
    def test_single_flow_gets_full_link(self):
        assert solve([(0, 1)], [10.0, 10.0]).tolist() == [10.0]

    def test_two_flows_share_a_link_equally(self):
        rates = solve([(0, 1), (0, 2)], [10.0, 20.0, 20.0])
        assert rates.tolist() == [5.0, 5.0]

    def test_bottleneck_then_refill(self):
        # flows A and B share link 0 (cap 10); B also uses link 1 (cap 100).
        # A third flow C uses only link 1: after B is frozen at 5, C takes 95.
        rates = solve([(0, -1), (0, 1), (-1, 1)], [10.0, 100.0])
        assert rates.tolist() == [5.0, 5.0, 95.0]

    def test_classic_three_link_chain(self):
        # textbook max-min: one long flow across both links, one short per link
        # caps 10 and 20: long flow limited to 5 by link 0, short flows take
        # the rest of their links.
        rates = solve([(0, 1), (0, -1), (-1, 1)], [10.0, 20.0])
        assert rates.tolist() == [5.0, 5.0, 15.0]

    def test_unconstrained_flow_is_unbounded(self):
        rates = solve([(-1, -1)], [10.0])
        assert rates.tolist() == [math.inf]

    def test_infinite_capacity(self):
        rates = solve([(0, 1), (0, 1)], [math.inf, math.inf])
        assert rates.tolist() == [math.inf, math.inf]

    def test_symmetric_flows_get_bit_identical_rates(self):
        rng = np.random.default_rng(11)
        caps = rng.uniform(1.0, 100.0, size=8)
        flows = [(0, 4), (0, 4), (0, 4), (1, 5), (1, 5)]
        rates = solve(flows, caps)
        assert rates[0] == rates[1] == rates[2]
        assert rates[3] == rates[4]

    def test_empty_input(self):
        assert fairshare.solve_rates(
            np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.ones(3)
        ).size == 0

    def test_total_rate_never_exceeds_capacity(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n_links = int(rng.integers(2, 10))
            n_flows = int(rng.integers(1, 40))
            caps = rng.uniform(1.0, 1000.0, size=n_links)
            flows = [
                (int(rng.integers(0, n_links)), int(rng.integers(-1, n_links)))
                for _ in range(n_flows)
            ]
            rates = solve(flows, caps)
            assert np.all(rates > 0)
            load = np.zeros(n_links)
            for (a, b), rate in zip(flows, rates):
                load[a] += rate
                if b >= 0:
                    load[b] += rate
            assert np.all(load <= caps * (1 + 1e-9))

    def test_work_conserving_on_single_link(self):
        # every byte of the bottleneck is handed out
        for n in (1, 2, 3, 7):
            rates = solve([(0, -1)] * n, [100.0])
            assert math.fsum(rates) == pytest.approx(100.0, abs=1e-9)


@pytest.mark.slow
class TestBackendEquivalence:
    def test_numpy_fallback_is_bit_identical(self, tmp_path):
        """Run the same random cases with RALP_DISABLE_NUMBA=1 in a
        subprocess and compare float bit patterns."""
        script = r"""
import json, sys
import numpy as np
from ralp import fairshare
assert fairshare.backend_name() == sys.argv[1], fairshare.backend_name()
rng = np.random.default_rng(99)
out = []
for _ in range(25):
    n_links = int(rng.integers(2, 12))
    n_flows = int(rng.integers(1, 60))
    caps = rng.uniform(0.5, 500.0, size=n_links)
    a = rng.integers(0, n_links, size=n_flows)
    b = rng.integers(-1, n_links, size=n_flows)
    rates = fairshare.solve_rates(a.astype(np.int64), b.astype(np.int64), caps)
    out.append([x.hex() for x in rates.tolist()])
print(json.dumps(out))
"""
        import os

        env_numba = dict(os.environ)
        env_numba.pop("RALP_DISABLE_NUMBA", None)
        env_numpy = dict(os.environ, RALP_DISABLE_NUMBA="1")
        results = {}
        for label, env in (("numba", env_numba), ("numpy", env_numpy)):
            proc = subprocess.run(
                [sys.executable, "-c", script, label],
                capture_output=True,
                text=True,
                env=env,
                check=True,
            )
            results[label] = json.loads(proc.stdout)
        assert results["numba"] == results["numpy"]
