"""Monotonic phase timers and cooperative deadlines."""

import time
from contextlib import contextmanager

from .errors import PhaseTimeout


class Deadline:
    def __init__(self, seconds, phase=""):
        self.seconds = seconds
        self.phase = phase
        self.start = time.monotonic()

    def expired(self):
        return self.seconds is not None and time.monotonic() - self.start > self.seconds

    def check(self, phase=None):
        if self.expired():
            raise PhaseTimeout(f"phase {phase or self.phase!r} exceeded {self.seconds} s")


@contextmanager
def timed(timings, key):
    """Store the elapsed milliseconds of the block in ``timings[key]``."""
    t0 = time.monotonic()
    try:
        yield
    finally:
        timings[key] = (time.monotonic() - t0) * 1000.0
