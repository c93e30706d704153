import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pick_freeze_mc(f, d, n, rng, chunk=1_000_000):
    """Brute-force Sobol' indices by plain Monte Carlo pick-freeze.

    Independent of the package's estimators: Jansen total order and the
    Saltelli first order, accumulated over chunks of i.i.d. uniform points.
    """
    s_first = np.zeros(d)
    s_total = np.zeros(d)
    s_y = s_y2 = 0.0
    done = 0
    while done < n:
        m = min(chunk, n - done)
        a = rng.random((m, d))
        b = rng.random((m, d))
        ya, yb = f(a), f(b)
        s_y += ya.sum() + yb.sum()
        s_y2 += (ya ** 2).sum() + (yb ** 2).sum()
        for i in range(d):
            ab = a.copy()
            ab[:, i] = b[:, i]
            yab = f(ab)
            s_first[i] += np.sum(yb * (yab - ya))
            s_total[i] += 0.5 * np.sum((ya - yab) ** 2)
        done += m
    mean = s_y / (2 * n)
    var = s_y2 / (2 * n) - mean ** 2
    return s_first / n / var, s_total / n / var


@pytest.fixture
def mc_oracle():
    return pick_freeze_mc
