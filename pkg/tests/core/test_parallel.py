"""Unit tests for framemap.core.parallel."""
from framemap.core.config import ENV_WORKERS
from framemap.core.parallel import ParallelExecutor, default_worker_count


def _square(x):
    return x * x


def test_results_keep_input_order_with_threads():
    assert ParallelExecutor.run_parallel(_square, range(20), max_workers=4) == [x * x for x in range(20)]


def test_sequential_when_single_worker():
    assert ParallelExecutor.run_parallel(_square, [3, 1, 2], max_workers=1) == [9, 1, 4]


def test_empty_input():
    assert ParallelExecutor.run_parallel(_square, [], max_workers=4) == []


def test_process_pool_results_in_order():
    assert ParallelExecutor.run_parallel(_square, [5, 4, 3], max_workers=2, use_processes=True) == [25, 16, 9]


def test_pool_failure_falls_back_to_sequential(mocker):
    mocker.patch("framemap.core.parallel.futures.ThreadPoolExecutor", side_effect=OSError("no threads"))
    assert ParallelExecutor.run_parallel(_square, [1, 2, 3], max_workers=3) == [1, 4, 9]


def test_default_worker_count_from_env(monkeypatch):
    monkeypatch.setenv(ENV_WORKERS, "5")
    assert default_worker_count() == 5


def test_default_worker_count_ignores_garbage(monkeypatch):
    monkeypatch.setenv(ENV_WORKERS, "lots")
    assert default_worker_count() >= 1
