import numpy as np
import pytest

from qkdsim.adversary import AttackSpec
from qkdsim.analysis import agreement, case_stats
from qkdsim.protocol import ProtocolConfig, SiftMode, run_bb84

CASE_N = 2048
CASE_RUNS = 10_000


@pytest.fixture(scope="session")
def attack_case_batch():
    """10^4 flip-resend runs at n=2048: case tallies plus per-run fractions.

    Shared by the adversary invariants (absolute +/-0.02 bands) and the
    analysis invariants (3-standard-error bands).
    """
    config = ProtocolConfig(n=CASE_N, sift_mode=SiftMode.EXPECTED)
    attack = AttackSpec()
    totals = None
    bob_fracs = np.empty(CASE_RUNS)
    eve_fracs = np.empty(CASE_RUNS)
    case_fracs = np.empty((CASE_RUNS, 3))
    for seed in range(CASE_RUNS):
        t = run_bb84(config, attack, seed=seed)
        stats = case_stats(t, range(CASE_N))
        totals = stats if totals is None else totals + stats
        m = len(t.sift)
        bob_fracs[seed] = agreement(t.sift.x_b, t.sift.x_a) / m
        eve_fracs[seed] = agreement(t.eve_estimate, t.sift.x_a) / m
        case_fracs[seed] = np.asarray(stats.counts) / stats.total
    return totals, bob_fracs, eve_fracs, case_fracs
