# File: app/services/mage/bench.py

import random
import statistics
import time
from typing import List, Sequence

from loguru import logger
from pydantic import BaseModel

from ...models.mage import MageView
from ..image.generator import generate_image
from .builder import instrument_group
from .derive import derive_measurement


class BenchPoint(BaseModel):
    page_count: int
    entries: int
    mean_ns: float


def bench_view(mars_pages: int, entries: int = 1, seed: int = 0) -> MageView:
    """A self-inclusive group of `entries` one-page enclaves with an N-page MARS."""
    rng = random.Random(seed)
    group = [generate_image(rng, 1, mars_pages=mars_pages) for _ in range(entries)]
    return MageView.from_image(instrument_group(group)[0])


def time_derivation(view: MageView, idx: int = 0, repeats: int = 5) -> float:
    samples = []
    for _ in range(repeats):
        start = time.perf_counter_ns()
        derive_measurement(view, idx)
        samples.append(time.perf_counter_ns() - start)
    return statistics.fmean(samples)


def bench_derivation(page_counts: Sequence[int], repeats: int = 5, entries: int = 1) -> List[BenchPoint]:
    points = []
    for pages in page_counts:
        view = bench_view(pages, entries)
        mean_ns = time_derivation(view, 0, repeats)
        logger.info(f"📊 {pages} MARS pages: {mean_ns / 1e6:.2f} ms per derivation")
        points.append(BenchPoint(page_count=pages, entries=entries, mean_ns=mean_ns))
    return points


def r_squared(points: Sequence[BenchPoint]) -> float:
    """Coefficient of determination of a least-squares line through the points."""
    xs = [float(p.page_count) for p in points]
    ys = [p.mean_ns for p in points]
    return statistics.correlation(xs, ys) ** 2


def to_csv(points: Sequence[BenchPoint]) -> str:
    return "page_count,mean_ns\n" + "".join(f"{p.page_count},{p.mean_ns:.0f}\n" for p in points)
