"""
Lightweight parallel execution helper using concurrent.futures.
Process pool for CPU-bound trials, thread pool otherwise.
Fallback to sequential on error or when max_workers < 2.
"""
import os
import sys
from concurrent import futures
from typing import Callable, Iterable, List, Optional, TypeVar

from tqdm import tqdm

from .config import ENV_WORKERS
from .logger import get_logger

try:
    import psutil
except ImportError:
    psutil = None  # type: ignore

logger = get_logger("parallel")

T = TypeVar("T")
R = TypeVar("R")


def default_worker_count() -> int:
    """FRAMEMAP_WORKERS if set, else physical cores (psutil), else os.cpu_count()."""
    raw = os.environ.get(ENV_WORKERS, "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning("Ignoring non-integer %s=%r", ENV_WORKERS, raw)
    if psutil is not None:
        try:
            n = psutil.cpu_count(logical=False)
            if n:
                return int(n)
        except Exception:
            pass
    return os.cpu_count() or 1


class ParallelExecutor:
    """
    Run a function over an iterable in parallel.
    Results come back in input order, so aggregation never depends on scheduling.
    """

    @staticmethod
    def run_parallel(
        function: Callable[[T], R],
        iterable: Iterable[T],
        max_workers: Optional[int] = None,
        use_processes: bool = False,
        progress: Optional[str] = None,
    ) -> List[R]:
        """
        Apply function to each item in iterable in parallel.

        Args:
            function: Callable that takes one element and returns a result.
                Must be picklable (module-level) when ``use_processes`` is True.
            iterable: Items to process.
            max_workers: Worker count; None means default_worker_count(). If < 2, runs sequentially.
            use_processes: ProcessPoolExecutor instead of ThreadPoolExecutor.
            progress: Label of a tqdm progress bar on stderr (shown only on a terminal).

        Returns:
            List of results in same order as iterable.
        """
        items = list(iterable)
        if not items:
            return []
        if max_workers is None:
            max_workers = default_worker_count()
        max_workers = min(max_workers, len(items))
        bar = tqdm(total=len(items), desc=progress, disable=progress is None or not sys.stderr.isatty())

        def _sequential() -> List[R]:
            out = []
            for x in items:
                out.append(function(x))
                bar.update(1)
            return out

        try:
            if max_workers < 2:
                return _sequential()
            pool_cls = futures.ProcessPoolExecutor if use_processes else futures.ThreadPoolExecutor
            try:
                with pool_cls(max_workers=max_workers) as executor:
                    results = []
                    for r in executor.map(function, items):
                        results.append(r)
                        bar.update(1)
                    return results
            except Exception as e:
                logger.warning("Parallel execution failed, falling back to sequential: %s", e)
                bar.reset()
                return _sequential()
        finally:
            bar.close()
