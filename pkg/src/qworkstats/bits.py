"""Bitstring conventions shared by the simulator and post-processing.

Qubit ``q`` is bit ``q`` of a statevector index (little-endian) and column
``q`` of a bit array; in text form qubit 0 is the leftmost character.
Bit 0 has energy -1 and bit 1 has energy +1 under ``H0 = -sum Z``.
"""
from __future__ import annotations

import numpy as np


def as_bit_array(bits) -> np.ndarray:
    """Coerce a bitstring (text, sequence or array) to a uint8 array."""
    if isinstance(bits, str):
        arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(bits, dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise ValueError(f"bits must be 0/1, got {bits!r}")
    return arr.astype(np.uint8)


def bits_to_text(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits).ravel())


def bits_to_index(bits: np.ndarray) -> np.ndarray:
    """Statevector index of each row of a ``(..., n)`` bit array (n <= 62)."""
    bits = np.asarray(bits)
    n = bits.shape[-1]
    if n > 62:
        raise ValueError("statevector indices need n <= 62")
    weights = np.left_shift(np.int64(1), np.arange(n, dtype=np.int64))
    return (bits.astype(np.int64) * weights).sum(axis=-1)


def index_to_bits(index, n: int) -> np.ndarray:
    index = np.asarray(index, dtype=np.int64)
    return ((index[..., None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.uint8)


def bits_to_int(bits: np.ndarray) -> list[int]:
    """Arbitrary-width integer key for each row of a 2-D bit array."""
    bits = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
    packed = np.packbits(bits, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def int_to_bits(key: int, n: int) -> np.ndarray:
    return np.array([(key >> q) & 1 for q in range(n)], dtype=np.uint8)


def energy_of_bits(bits) -> np.ndarray | int:
    """``E_x = sum_q (-1)^(x_q + 1)``; vectorised over leading axes."""
    arr = np.asarray(bits, dtype=np.int64)
    out = 2 * arr.sum(axis=-1) - arr.shape[-1]
    return int(out) if np.ndim(out) == 0 else out


def energy_of_int(key: int, n: int) -> int:
    return 2 * bin(key).count("1") - n


def basis_energies(n: int) -> np.ndarray:
    """Energy of every computational basis state, indexed like a statevector."""
    idx = np.arange(1 << n, dtype=np.int64)
    pop = np.zeros(1 << n, dtype=np.int64)
    for q in range(n):
        pop += (idx >> q) & 1
    return (2 * pop - n).astype(float)
