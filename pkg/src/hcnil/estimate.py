"""Monte Carlo estimates with standard errors and reproducible chunked runs."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Estimate", "Accumulator", "run_chunks", "DEFAULT_CHUNK"]

DEFAULT_CHUNK = 20_000


@dataclass(frozen=True)
class Estimate:
    """Mean of a (possibly complex) sample with its standard error.

    ``stderr`` is the standard error of the complex mean, i.e. the square
    root of the summed variances of the real and imaginary parts.
    """

    value: complex
    stderr: float
    samples: int
    flags: tuple[str, ...] = field(default=())

    def z_score(self, reference) -> float:
        diff = abs(complex(self.value) - complex(reference))
        if self.stderr == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / self.stderr

    def to_dict(self) -> dict:
        v = complex(self.value)
        return {
            "value": [v.real, v.imag],
            "stderr": self.stderr,
            "samples": self.samples,
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Estimate:
        re, im = d["value"]
        return cls(complex(re, im), float(d["stderr"]), int(d["samples"]), tuple(d.get("flags", ())))


class Accumulator:
    """Streaming (sum, sum of squares, count); merges associatively."""

    __slots__ = ("total", "total_sq", "count")

    def __init__(self, total=0j, total_sq=0.0, count=0):
        self.total = complex(total)
        self.total_sq = float(total_sq)
        self.count = int(count)

    def add(self, values) -> Accumulator:
        values = np.asarray(values)
        self.total += complex(values.sum())
        self.total_sq += float(np.sum(np.abs(values) ** 2))
        self.count += values.size
        return self

    def merge(self, other: Accumulator) -> Accumulator:
        return Accumulator(self.total + other.total, self.total_sq + other.total_sq, self.count + other.count)

    def estimate(self, flags=()) -> Estimate:
        if self.count == 0:
            raise ValueError("no samples")
        mean = self.total / self.count
        if self.count == 1:
            return Estimate(mean, math.inf, 1, tuple(flags))
        var = (self.total_sq - self.count * abs(mean) ** 2) / (self.count - 1)
        return Estimate(mean, math.sqrt(max(var, 0.0) / self.count), self.count, tuple(flags))


def run_chunks(draw, samples: int, seed, chunk: int = DEFAULT_CHUNK, threads: int = 1) -> Accumulator:
    """Evaluate ``draw(rng, n)`` over a fixed chunk plan and merge the results.

    Each chunk gets its own generator spawned from ``seed``, so the result
    depends only on ``(seed, samples, chunk)`` and not on ``threads``.
    ``draw`` returns an array of per-sample values.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")
    sizes = [chunk] * (samples // chunk)
    if samples % chunk:
        sizes.append(samples % chunk)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    seeds = root.spawn(len(sizes))

    def one(args):
        ss, n = args
        return Accumulator().add(draw(np.random.default_rng(ss), n))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(one, zip(seeds, sizes)))
    else:
        parts = [one(a) for a in zip(seeds, sizes)]
    acc = Accumulator()
    for p in parts:  # fixed merge order
        acc = acc.merge(p)
    return acc
