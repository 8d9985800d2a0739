"""Statevector simulation of depth-p QAOA MaxCut circuits with shot sampling.

Qubit ``j`` is bit ``j`` of the basis-state index. The state after the
circuit is ``prod_l exp(-i beta_l B) exp(-i gamma_l C) H^n |0>`` with
``C = sum_{(u,v)} (1 - Z_u Z_v) / 2`` (the cut size) and ``B = sum_j X_j``.
"""
import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import InvalidShots
from .oracles import NoisyEvaluation

__all__ = [
    "CHVATAL_EDGES",
    "Graph",
    "QaoaCircuit",
    "ShotOracle",
    "brute_force_maxcut",
    "cut_values",
    "exact_expectation",
    "load_graph",
    "shot_oracle",
    "statevector",
]

MAX_VERTICES = 20

CHVATAL_EDGES = (
    (0, 1), (0, 4), (0, 6), (0, 9), (1, 2), (1, 5), (1, 7), (2, 3), (2, 6), (2, 8), (3, 4), (3, 7),
    (3, 9), (4, 5), (4, 8), (5, 10), (5, 11), (6, 10), (6, 11), (7, 8), (7, 11), (8, 10), (9, 10), (9, 11),
)


@dataclass(frozen=True)
class Graph:
    """Undirected unit-weight graph on vertices ``0..n-1``."""

    n: int
    edges: tuple

    def __post_init__(self):
        if not 1 <= self.n <= MAX_VERTICES:
            raise ValueError(f"need 1 <= n <= {MAX_VERTICES}, got {self.n}")
        seen = set()
        norm = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) outside 0..{self.n - 1}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            norm.append(key)
        object.__setattr__(self, "edges", tuple(norm))

    @classmethod
    def cycle(cls, n):
        return cls(n, tuple((i, (i + 1) % n) for i in range(n)))

    @classmethod
    def c6(cls):
        return cls.cycle(6)

    @classmethod
    def chvatal(cls):
        return cls(12, CHVATAL_EDGES)


def load_graph(spec):
    """``c6``, ``chvatal`` or a path to a file with ``n m`` then ``m`` lines ``u v``."""
    if spec == "c6":
        return Graph.c6()
    if spec == "chvatal":
        return Graph.chvatal()
    lines = [ln.split() for ln in Path(spec).read_text().splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 2:
        raise ValueError(f"{spec}: first line must be 'n m'")
    n, m = (int(t) for t in lines[0])
    edges = [tuple(int(t) for t in ln) for ln in lines[1:]]
    if len(edges) != m or any(len(e) != 2 for e in edges):
        raise ValueError(f"{spec}: expected {m} lines 'u v'")
    return Graph(n, tuple(edges))


def cut_values(graph):
    """Cut size of every bitstring, indexed by basis state."""
    z = np.arange(2**graph.n)
    cut = np.zeros(2**graph.n)
    for u, v in graph.edges:
        cut += ((z >> u) & 1) != ((z >> v) & 1)
    return cut


def brute_force_maxcut(graph):
    """Exhaustive maximum cut, independent of the vectorized ``cut_values``."""
    best = 0
    for bits in itertools.product((0, 1), repeat=graph.n):
        best = max(best, sum(bits[u] != bits[v] for u, v in graph.edges))
    return best


@dataclass(frozen=True)
class QaoaCircuit:
    graph: Graph
    depth: int

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")

    @property
    def n_params(self):
        return 2 * self.depth


def _apply_mixer(psi, n, beta):
    c, s = np.cos(beta), -1j * np.sin(beta)
    for j in range(n):
        view = psi.reshape(-1, 2, 2**j)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        view[:, 0, :] = c * a0 + s * a1
        view[:, 1, :] = s * a0 + c * a1
    return psi


def statevector(circuit, theta, cut=None):
    """Final state for ``theta = (gamma_1, beta_1, ..., gamma_p, beta_p)``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circuit.n_params,):
        raise ValueError(f"expected {circuit.n_params} parameters, got shape {theta.shape}")
    n = circuit.graph.n
    if cut is None:
        cut = cut_values(circuit.graph)
    psi = np.full(2**n, 2.0 ** (-n / 2), dtype=complex)
    for gamma, beta in theta.reshape(-1, 2):
        psi *= np.exp(-1j * gamma * cut)
        psi = _apply_mixer(psi, n, beta)
    return psi


def exact_expectation(circuit, theta, cut=None):
    """Expected cut size ``sum_z |<z|psi>|^2 cut(z)``."""
    if cut is None:
        cut = cut_values(circuit.graph)
    psi = statevector(circuit, theta, cut)
    return float(np.abs(psi) ** 2 @ cut)


class ShotOracle:
    """Negated sample-mean cut from ``shots`` measurements of the QAOA state.

    The reported ``std_error`` is the sample standard deviation over
    ``sqrt(shots)``. ``true_value`` is the negated exact expectation.
    """

    def __init__(self, circuit, shots, seed=None):
        if shots < 2:
            raise InvalidShots(f"shots must be >= 2, got {shots!r}")
        self.circuit = circuit
        self.shots = int(shots)
        self.dim = circuit.n_params
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.cut = cut_values(circuit.graph)
        self.n_calls = 0

    def evaluate(self, theta):
        psi = statevector(self.circuit, theta, self.cut)
        p = np.abs(psi) ** 2
        p /= p.sum()
        samples = self.cut[self.rng.choice(p.shape[0], size=self.shots, p=p)]
        self.n_calls += 1
        return NoisyEvaluation(-float(samples.mean()), float(samples.std(ddof=1) / np.sqrt(self.shots)))

    def true_value(self, theta):
        return -exact_expectation(self.circuit, theta, self.cut)

    def __call__(self, theta):
        return self.evaluate(theta).value


def shot_oracle(circuit, shots, seed=None):
    return ShotOracle(circuit, shots, seed)
