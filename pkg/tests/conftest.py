import os
import sys

# thread-count determinism tests switch between 1, 4 and 8 threads, so the pool
# must be sized before numba is first imported
os.environ.setdefault("NUMBA_NUM_THREADS", "8")

sys.path.insert(0, os.path.dirname(__file__))

from hypothesis import HealthCheck, settings  # noqa: E402

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")
