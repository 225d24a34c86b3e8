import atexit
import logging
import os
import time
from collections import defaultdict
from contextlib import contextmanager
from datetime import datetime

from .config import CURRENT_PRESET, LOGFILE

log = logging.getLogger(__name__)


class RunLogger:
    """Console progress and a one-line-per-run log for an experiment."""

    LOGFILE = LOGFILE

    def __init__(self, experiment, preset=None, logdir=None, quiet=False):
        self.experiment = experiment
        self.preset = preset or CURRENT_PRESET
        self.quiet = quiet
        self.logfile = os.path.join(logdir, self.LOGFILE) if logdir else self.LOGFILE
        self.status = "unfinished"
        self._timings = []
        self._closed = False
        self._print_header()
        atexit.register(self.close)

    def _print(self, *args, **kwargs):
        if not self.quiet:
            print(*args, **kwargs)

    def _print_header(self):
        bar = "=" * (len(self.experiment) + 18)
        self._print(f"\n{bar}")
        self._print(f"  frachs experiment: {self.experiment}  ")
        self._print(f"  Config Preset: {self.preset}  ")
        self._print(f"{bar}\n")

    @contextmanager
    def timeit(self, action_name):
        self._print(f"[⏳] {action_name}...", end="", flush=True)
        start = time.perf_counter()
        try:
            yield
        except Exception:
            self._print(" \033[91m✘\033[0m")
            raise
        elapsed = time.perf_counter() - start
        self._timings.append((action_name, elapsed))
        log.debug("%s took %.3fs", action_name, elapsed)
        self._print(f" \033[92m✔\033[0m ({elapsed:.3f}s)")

    @property
    def total_time(self):
        return sum(elapsed for _, elapsed in self._timings)

    @property
    def timings(self):
        return list(self._timings)

    def close(self, status=None):
        if status is not None:
            self.status = status
        if self._closed:
            return
        self._closed = True
        dt = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
        line = (
            f"{dt} | {self.experiment} | {self.preset} | "
            f"total_time={self.total_time:.4f}s | {self.status}\n"
        )
        try:
            with open(self.logfile, "a") as f:
                f.write(line)
                f.flush()
                os.fsync(f.fileno())
        except OSError as e:
            log.warning("could not write run log %s: %s", self.logfile, e)


def read_stats(logfile=LOGFILE):
    """Group run-log lines by experiment: {experiment: {"count", "total", "passed"}}."""
    stats = defaultdict(lambda: {"count": 0, "total": 0.0, "passed": 0})
    if not os.path.exists(logfile):
        return {}
    with open(logfile) as f:
        for line in f:
            parts = [p.strip() for p in line.strip().split("|")]
            if len(parts) != 5:
                continue
            _, experiment, _, time_part, status = parts
            try:
                elapsed = float(time_part.split("=")[-1][:-1])  # strip the trailing 's'
            except ValueError:
                continue
            entry = stats[experiment]
            entry["count"] += 1
            entry["total"] += elapsed
            entry["passed"] += status == "pass"
    return dict(stats)


def print_stats(logfile=LOGFILE):
    """Print a summary of the run log, slowest experiment last."""
    if not os.path.exists(logfile):
        print("No log file found.")
        return
    stats = read_stats(logfile)
    if not stats:
        print("No valid log entries found.")
        return

    col_name = 24
    col_avg = 16
    col_runs = 7
    width = 5 + 1 + col_name + 1 + col_avg + 1 + col_runs + 1 + col_runs
    print("\n================ frachs run summary ================")
    print(
        f"{'Rank':<5} {'Experiment':<{col_name}} {'Avg Time (s)':<{col_avg}} "
        f"{'Runs':<{col_runs}} {'Passed':<{col_runs}}"
    )
    print("-" * width)
    results = [
        (name, d["total"] / d["count"], d["count"], d["passed"]) for name, d in stats.items()
    ]
    results.sort(key=lambda x: x[1])
    for i, (name, avg, count, passed) in enumerate(results, 1):
        print(f"{i:<5} {name:<{col_name}} {avg:<{col_avg}.4f} {count:<{col_runs}} {passed:<{col_runs}}")
    print("=" * width)


if __name__ == "__main__":
    print_stats()
