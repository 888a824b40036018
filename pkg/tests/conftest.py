"""Shared test configuration.

Keeps hypothesis fast and deterministic so the whole suite stays well
under the one minute budget.
"""

from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    max_examples=30,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("suite")
