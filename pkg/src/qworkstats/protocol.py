"""Drive protocol and its compilation into a layered gate program.

Gate conventions: ``RZ(a) = exp(-i a Z/2)``, ``RY(a) = exp(-i a Y/2)``,
``RXX(a) = exp(-i a X(x)X / 2)``. With ``H0 = -sum Z`` one half step of the
diagonal evolution is a layer of ``RZ(-dt)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .lattice import EdgeColoring, Graph, color_edges


@dataclass(frozen=True)
class DriveParams:
    beta: float
    tau: float
    gamma: float
    n_trotter: int

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if self.n_trotter < 1:
            raise ValueError(f"n_trotter must be >= 1, got {self.n_trotter}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if not math.isfinite(self.gamma):
            raise ValueError("gamma must be finite")

    @property
    def dt(self) -> float:
        return self.tau / self.n_trotter

    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_trotter) + 0.5) * self.dt

    def replace(self, **kw) -> "DriveParams":
        d = dict(beta=self.beta, tau=self.tau, gamma=self.gamma, n_trotter=self.n_trotter)
        d.update(kw)
        return DriveParams(**d)


def drive_strength(t, tau: float, gamma: float):
    """lambda_t = gamma sin(pi t / tau)."""
    return gamma * np.sin(np.pi * np.asarray(t) / tau)


def trotter_weights(p: DriveParams) -> np.ndarray:
    """Drive strength sampled at the step midpoints ``(l + 1/2) dt``."""
    return drive_strength(p.midpoints(), p.tau, p.gamma)


def thermal_one_probability(beta: float) -> float:
    """Probability of bit 1 (energy +1) in the single-site Gibbs state of -Z."""
    return 0.5 * (1.0 - math.tanh(beta))


def prep_angle(beta: float) -> float:
    """RY angle with cos^2(theta/2) equal to the Gibbs weight of bit 0."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    q0 = 0.5 * (1.0 + math.tanh(beta))
    return 2.0 * math.acos(math.sqrt(q0))


OPS = ("RY", "RZ", "RXX", "MEASURE_ALL")


@dataclass(frozen=True)
class Instruction:
    op: str
    qubits: tuple[int, ...]
    angle: float | None = None
    layer: int = 0
    tag: str | None = None

    def to_dict(self) -> dict:
        d = {"op": self.op, "qubits": list(self.qubits), "angle": self.angle, "layer": self.layer}
        if self.tag is not None:
            d["tag"] = self.tag
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Instruction":
        if d["op"] not in OPS:
            raise ValueError(f"unknown op {d['op']!r}")
        angle = d.get("angle")
        return cls(d["op"], tuple(int(q) for q in d["qubits"]),
                   None if angle is None else float(angle), int(d.get("layer", 0)), d.get("tag"))


@dataclass(frozen=True)
class GateProgram:
    n_qubits: int
    instructions: tuple[Instruction, ...]

    def __iter__(self) -> Iterator[Instruction]:
        return iter(self.instructions)

    def __len__(self) -> int:
        return len(self.instructions)

    def body(self) -> "GateProgram":
        """Instructions strictly between MEASURE_ALL('x') and MEASURE_ALL('y')."""
        idx = [i for i, ins in enumerate(self.instructions) if ins.op == "MEASURE_ALL"]
        if len(idx) != 2:
            raise ValueError("program must contain exactly two MEASURE_ALL instructions")
        return GateProgram(self.n_qubits, self.instructions[idx[0] + 1: idx[1]])

    def op_counts(self) -> dict[str, int]:
        """Number of elementary operations per type; MEASURE_ALL counts each qubit."""
        counts = {"RY": 0, "RZ": 0, "RXX": 0, "MEASURE_X": 0, "MEASURE_Y": 0}
        for ins in self.instructions:
            if ins.op == "MEASURE_ALL":
                counts["MEASURE_" + (ins.tag or "x").upper()] += len(ins.qubits)
            else:
                counts[ins.op] += 1
        return counts

    def layer_counts(self) -> dict[str, int]:
        layers: dict[str, set[int]] = {}
        for ins in self.instructions:
            key = "MEASURE_" + (ins.tag or "x").upper() if ins.op == "MEASURE_ALL" else ins.op
            layers.setdefault(key, set()).add(ins.layer)
        return {k: len(v) for k, v in layers.items()}

    @property
    def depth(self) -> int:
        return len({ins.layer for ins in self.instructions})

    def to_json(self) -> str:
        return json.dumps({"n_qubits": self.n_qubits,
                           "instructions": [ins.to_dict() for ins in self.instructions]})

    @classmethod
    def from_json(cls, text: str) -> "GateProgram":
        data = json.loads(text)
        return cls(int(data["n_qubits"]), tuple(Instruction.from_dict(d) for d in data["instructions"]))


def build_program(g: Graph, p: DriveParams, coloring: EdgeColoring | None = None) -> GateProgram:
    """Compile the two-point-measurement circuit for graph ``g``.

    Layout: RY(theta_beta) layer, MEASURE_ALL('x'), then the Trotter body in
    which adjacent half steps of the diagonal evolution are merged, so there
    are ``n_trotter + 1`` RZ layers (angles -dt, -2dt, ..., -2dt, -dt) and
    ``c`` RXX layers per step, then MEASURE_ALL('y').
    """
    if coloring is None:
        coloring = color_edges(g)
    elif not coloring.matches(g):
        raise ValueError("edge coloring does not match the graph")
    n, m = g.n_vertices, g.n_edges
    qubits = tuple(range(n))
    dt = p.dt
    weights = trotter_weights(p)
    classes = coloring.classes(g)

    out: list[Instruction] = []
    layer = 0

    def rz_layer(angle: float) -> None:
        nonlocal layer
        out.extend(Instruction("RZ", (q,), angle, layer) for q in qubits)
        layer += 1

    theta = prep_angle(p.beta)
    out.extend(Instruction("RY", (q,), theta, layer) for q in qubits)
    layer += 1
    out.append(Instruction("MEASURE_ALL", qubits, None, layer, "x"))
    layer += 1

    rz_layer(-dt)
    for ell, w in enumerate(weights):
        phi = 2.0 * dt * float(w) / m
        for cls in classes:
            out.extend(Instruction("RXX", e, phi, layer) for e in cls)
            layer += 1
        rz_layer(-2.0 * dt if ell < p.n_trotter - 1 else -dt)

    out.append(Instruction("MEASURE_ALL", qubits, None, layer, "y"))
    return GateProgram(n, tuple(out))
