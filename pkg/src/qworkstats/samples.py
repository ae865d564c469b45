"""Two-point trajectory containers and the ``x_bits,y_bits`` CSV format."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

from .bits import as_bit_array, bits_to_text


class SampleFormatError(ValueError):
    pass


class TPMSample(NamedTuple):
    x: np.ndarray
    y: np.ndarray


@dataclass(frozen=True, eq=False)
class TPMSamples:
    """``N`` trajectories stored as two ``(N, n)`` uint8 arrays."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=np.uint8))
        y = np.atleast_2d(np.asarray(self.y, dtype=np.uint8))
        if x.shape != y.shape:
            raise ValueError(f"x and y shapes differ: {x.shape} vs {y.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_pairs(cls, pairs) -> "TPMSamples":
        pairs = list(pairs)
        if not pairs:
            raise ValueError("no samples")
        xs = np.array([as_bit_array(x) for x, _ in pairs])
        ys = np.array([as_bit_array(y) for _, y in pairs])
        return cls(xs, ys)

    @property
    def n_qubits(self) -> int:
        return self.x.shape[1]

    def __len__(self) -> int:
        return self.x.shape[0]

    def __getitem__(self, k):
        if isinstance(k, (int, np.integer)):
            return TPMSample(self.x[k], self.y[k])
        return TPMSamples(self.x[k], self.y[k])

    def __iter__(self) -> Iterator[TPMSample]:
        for k in range(len(self)):
            yield TPMSample(self.x[k], self.y[k])

    def __eq__(self, other) -> bool:
        return (isinstance(other, TPMSamples) and np.array_equal(self.x, other.x)
                and np.array_equal(self.y, other.y))


def dump_samples(samples: TPMSamples, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_bits", "y_bits"])
        for x, y in zip(samples.x, samples.y):
            w.writerow([bits_to_text(x), bits_to_text(y)])


def load_samples(path: str | Path) -> TPMSamples:
    """Read a ``x_bits,y_bits`` CSV; malformed rows raise with their line number."""
    xs, ys = [], []
    n = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x_bits", "y_bits"]:
            raise SampleFormatError(f"{path}: line 1: expected header 'x_bits,y_bits', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise SampleFormatError(f"{path}: line {lineno}: expected 2 columns, got {len(row)}")
            xt, yt = row[0].strip(), row[1].strip()
            if n is None:
                n = len(xt)
            if len(xt) != n or len(yt) != n:
                raise SampleFormatError(
                    f"{path}: line {lineno}: bit length {len(xt)}/{len(yt)} differs from {n}")
            if set(xt + yt) - {"0", "1"}:
                raise SampleFormatError(f"{path}: line {lineno}: non-binary characters")
            xs.append(xt)
            ys.append(yt)
    if not xs:
        raise SampleFormatError(f"{path}: no samples")
    to_arr = lambda rows: (np.frombuffer("".join(rows).encode("ascii"), dtype=np.uint8)
                           - ord("0")).reshape(len(rows), n)
    return TPMSamples(to_arr(xs), to_arr(ys))
