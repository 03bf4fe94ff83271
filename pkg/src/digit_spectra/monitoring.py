"""Progress reporting for long sums.

A ``Progress`` counter is advanced by the computation (from any thread);
``ProgressMonitorDaemon`` logs it at a fixed interval together with the
process resource usage from psutil.
"""

from __future__ import annotations

import abc
import logging
import threading
import time
from typing import Any

import psutil  # type: ignore[import-untyped]

logger = logging.getLogger("digit_spectra.monitoring")


class Progress:
    """Thread-safe processed/total counter."""

    def __init__(self, total: int, label: str = "") -> None:
        self.total = max(0, int(total))
        self.label = label
        self._done = 0
        self._lock = threading.Lock()
        self._started = time.monotonic()

    def advance(self, count: int) -> None:
        with self._lock:
            self._done += int(count)

    @property
    def done(self) -> int:
        with self._lock:
            return self._done

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self._started

    def fraction(self) -> float:
        if self.total == 0:
            return 1.0
        return min(1.0, self.done / self.total)


def advance(progress: Progress | None, count: int) -> None:
    """Advance ``progress`` if one is attached."""
    if progress is not None:
        progress.advance(count)


class MonitoringDaemon(threading.Thread, abc.ABC):
    """Background thread that calls ``work()`` at a fixed interval.

    The thread is a daemon so it won't keep the process alive.
    ``stop()`` returns after the current iteration.
    """

    def __init__(self, interval: float, name: str) -> None:
        super().__init__(daemon=True, name=name)
        self._interval = interval
        self._stop_event = threading.Event()

    def run(self) -> None:
        while True:
            try:
                self.work()
            except Exception:
                logger.debug("monitoring iteration failed", exc_info=True)
            if self._stop_event.wait(self._interval):
                break

    def stop(self) -> None:
        self._stop_event.set()

    @abc.abstractmethod
    def work(self) -> None:
        """Override to perform periodic work."""
        ...


def _resource_usage() -> dict[str, float]:
    usage: dict[str, float] = {}
    try:
        usage["cpu"] = psutil.cpu_percent(interval=None)
    except Exception:
        pass
    try:
        proc = psutil.Process()
        rss = proc.memory_info().rss
        # Pool workers are child processes
        for child in proc.children(recursive=True):
            try:
                rss += child.memory_info().rss
            except (psutil.NoSuchProcess, psutil.AccessDenied):
                pass
        usage["rss_gb"] = round(rss / (1024**3), 3)
    except Exception:
        pass
    return usage


class ProgressMonitorDaemon(MonitoringDaemon):
    """Logs a ``Progress`` counter and resource usage every ``interval`` seconds."""

    def __init__(self, progress: Progress, interval: float = 5.0) -> None:
        super().__init__(interval=interval, name="digit-spectra-progress")
        self.progress = progress
        # First cpu_percent call always returns 0.0
        try:
            psutil.cpu_percent(interval=None)
        except Exception:
            pass

    def work(self) -> None:
        p = self.progress
        usage = _resource_usage()
        logger.info(
            "%s %d/%d (%.1f%%) elapsed=%.1fs cpu=%s%% rss=%sGB",
            p.label or "progress",
            p.done,
            p.total,
            100.0 * p.fraction(),
            p.elapsed,
            usage.get("cpu", "?"),
            usage.get("rss_gb", "?"),
        )

    def __enter__(self) -> ProgressMonitorDaemon:
        self.start()
        return self

    def __exit__(self, *exc: Any) -> None:
        self.stop()
        self.join(timeout=self._interval + 1.0)
        self.work()
