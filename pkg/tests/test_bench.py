import pytest

from app.services.mage.bench import BenchPoint, bench_derivation, bench_view, r_squared, time_derivation, to_csv


def test_csv_format():
    points = [BenchPoint(page_count=1, entries=1, mean_ns=1500.4), BenchPoint(page_count=10, entries=1, mean_ns=15000)]
    assert to_csv(points) == "page_count,mean_ns\n1,1500\n10,15000\n"


def test_r_squared_of_a_line():
    points = [BenchPoint(page_count=n, entries=1, mean_ns=3.0 * n + 2) for n in (1, 10, 100)]
    assert r_squared(points) == pytest.approx(1.0)


@pytest.mark.bench
def test_derivation_time_grows_linearly():
    points = bench_derivation([1, 10, 100, 1000], repeats=2)
    assert r_squared(points) >= 0.99
    assert points[-1].mean_ns > points[0].mean_ns


@pytest.mark.bench
def test_time_independent_of_entry_count():
    few = time_derivation(bench_view(1, entries=1), repeats=5)
    many = time_derivation(bench_view(1, entries=85), repeats=5)
    assert max(few, many) / min(few, many) < 1.2
