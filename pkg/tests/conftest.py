import math
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from latlab.ratpoints import RationalPointCanon

# Property tests mix exact arithmetic with enumeration, so per-example time
# varies too much for hypothesis deadlines to be meaningful.
settings.register_profile(
    "suite",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def canonical_sweep():
    """Every canonical tuple with b <= 8, q <= 12, shared across test modules."""
    pts = []
    for b in range(1, 9):
        for a in range(b):
            if math.gcd(a, b) != 1:
                continue
            for q in range(1, 13):
                for p1 in range(q):
                    for p2 in range(q):
                        if math.gcd(math.gcd(p1, p2), q) != 1:
                            continue
                        pts.append(RationalPointCanon(a=a, b=b, p1=p1, p2=p2, q=q))
    return tuple(pts)
