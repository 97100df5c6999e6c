"""Thread placement: close (fill sockets in CPU-id order) or spread (round-robin over sockets)."""

from __future__ import annotations

import glob
import logging
import os
import re
from collections import defaultdict
from dataclasses import dataclass

logger = logging.getLogger(__name__)

CLOSE = "close"
SPREAD = "spread"

SUPPORTED = hasattr(os, "sched_getaffinity") and hasattr(os, "sched_setaffinity")


def allowed_cpus():
    if SUPPORTED:
        return sorted(os.sched_getaffinity(0))
    return list(range(os.cpu_count() or 1))


def cpu_sockets(sysfs="/sys/devices/system/cpu"):
    """Map socket id -> sorted CPU ids, from sysfs. Falls back to one socket."""
    sockets = defaultdict(list)
    for path in glob.glob(os.path.join(sysfs, "cpu[0-9]*", "topology", "physical_package_id")):
        cpu = int(re.search(r"cpu(\d+)", path).group(1))
        try:
            with open(path) as fh:
                sockets[int(fh.read().strip())].append(cpu)
        except (OSError, ValueError):
            continue
    if not sockets:
        return {0: list(range(os.cpu_count() or 1))}
    return {s: sorted(c) for s, c in sorted(sockets.items())}


@dataclass(frozen=True)
class AffinityPolicy:
    kind: str = CLOSE
    thread_count: int = 1

    def __post_init__(self):
        if self.kind not in (CLOSE, SPREAD):
            raise ValueError(f"affinity must be 'close' or 'spread', got {self.kind!r}")
        if self.thread_count < 1:
            raise ValueError("thread_count must be positive")

    def cpu_plan(self, sockets=None, allowed=None):
        """CPU id for each thread, in thread order."""
        sockets = cpu_sockets() if sockets is None else sockets
        allowed = set(allowed_cpus() if allowed is None else allowed)
        per_socket = [[c for c in cpus if c in allowed] for _, cpus in sorted(sockets.items())]
        per_socket = [cpus for cpus in per_socket if cpus] or [sorted(allowed)]
        if self.kind == CLOSE:
            order = [c for cpus in per_socket for c in cpus]
        else:
            order = []
            depth = max(len(cpus) for cpus in per_socket)
            for i in range(depth):
                order.extend(cpus[i] for cpus in per_socket if i < len(cpus))
        return [order[t % len(order)] for t in range(self.thread_count)]

    def environment(self):
        """Variables an OpenMP-threaded BLAS reads at start-up to honour this policy."""
        return {
            "KMP_AFFINITY": self.kind,
            "OMP_PROC_BIND": self.kind,
            "OMP_NUM_THREADS": str(self.thread_count),
        }


def pin_current_thread(cpu):
    """Pin the calling thread to ``cpu``. Returns False when pinning is unavailable."""
    if not SUPPORTED:
        return False
    try:
        os.sched_setaffinity(0, {cpu})
    except OSError as exc:
        logger.debug("could not pin thread to cpu %s: %s", cpu, exc)
        return False
    return True
