"""Contrast subgraphs: node sets that concentrate template differences.

Given templates ``G_a`` and ``G_b``, the contrast matrix is their difference
with a zeroed diagonal.  A node set S is scored by the sum of the induced
submatrix entries minus ``eta * |S|^2``, so ``eta`` trades edge mass against
subgraph size.  Maximization is NP-hard in general; the module pairs a
multi-start local search with an exhaustive reference for small graphs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, DimensionMismatch, IndexOutOfRange, TooLarge

BRUTE_FORCE_LIMIT = 20

# Accepted improvement must exceed this to rule out float-noise move cycles.
_GAIN_EPS = 1e-12


def contrast_matrix(g_a: np.ndarray, g_b: np.ndarray) -> np.ndarray:
    """Entrywise template difference with the diagonal zeroed."""
    g_a = np.asarray(g_a, dtype=float)
    g_b = np.asarray(g_b, dtype=float)
    if g_a.shape != g_b.shape:
        raise DimensionMismatch(f"shapes differ: {g_a.shape} vs {g_b.shape}")
    if g_a.ndim != 2 or g_a.shape[0] != g_a.shape[1]:
        raise DimensionMismatch(f"templates must be square, got {g_a.shape}")
    d = g_a - g_b
    np.fill_diagonal(d, 0.0)
    return d


@dataclass
class ContrastProblem:
    d: np.ndarray
    eta: float = 0.02
    note: str = ""

    @classmethod
    def from_templates(cls, templates, group_a: int, group_b: int, eta: float = 0.02):
        mats = getattr(templates, "templates", templates)
        d = contrast_matrix(mats[group_a], mats[group_b])
        return cls(d, eta, note=f"positive edges denser in group {group_a}")


@dataclass
class ContrastSubgraph:
    nodes: list[int]
    edges: list[tuple[int, int, float]]
    score: float
    eta: float
    tau: float = 0.0


def _check_nodes(nodes, m):
    seen = set()
    for v in nodes:
        v = int(v)
        if not 0 <= v < m:
            raise IndexOutOfRange(f"node {v} outside 0..{m - 1}")
        if v in seen:
            raise IndexOutOfRange(f"node {v} listed twice")
        seen.add(v)


def subgraph_score(d: np.ndarray, nodes, eta: float) -> float:
    """Sum of d over the induced node set minus eta * |S|^2."""
    d = np.asarray(d, dtype=float)
    _check_nodes(nodes, d.shape[0])
    nodes = [int(v) for v in nodes]
    if not nodes:
        return 0.0
    sub = d[np.ix_(nodes, nodes)]
    return float(sub.sum() - eta * len(nodes) ** 2)


def _best_move(d, members, row_sums, size, eta):
    """Best strictly improving add/remove/swap, or None.

    Candidate gains are evaluated in a fixed order (adds by node, removes by
    node, then swaps by (out, in)); the first occurrence of the maximal gain
    wins, which resolves ties toward the lowest node index.
    """
    m = d.shape[0]
    inside = np.flatnonzero(members)
    outside = np.flatnonzero(~members)
    gains = []
    moves = []
    if outside.size:
        add = 2.0 * row_sums[outside] - eta * (2 * size + 1)
        gains.append(add)
        moves.extend(("add", int(v), -1) for v in outside)
    if inside.size:
        rem = -2.0 * row_sums[inside] + eta * (2 * size - 1)
        gains.append(rem)
        moves.extend(("remove", int(v), -1) for v in inside)
    if inside.size and outside.size:
        swap = 2.0 * (
            row_sums[outside][None, :]
            - row_sums[inside][:, None]
            - d[np.ix_(inside, outside)]
        )
        gains.append(swap.ravel())
        moves.extend(
            ("swap", int(o), int(i))
            for o in inside
            for i in outside
        )
    if not gains:
        return None
    all_gains = np.concatenate(gains)
    pos = int(np.argmax(all_gains))
    if all_gains[pos] <= _GAIN_EPS:
        return None
    return moves[pos]


def _climb(d, members, eta):
    members = members.copy()
    while True:
        row_sums = d @ members.astype(float)
        size = int(members.sum())
        move = _best_move(d, members, row_sums, size, eta)
        if move is None:
            break
        kind, a, b = move
        if kind == "add":
            members[a] = True
        elif kind == "remove":
            members[a] = False
        else:
            members[a] = False
            members[b] = True
    return members


def local_search(problem: ContrastProblem, restarts: int = 16, seed: int = 0):
    """Multi-start hill climbing over node sets.

    Each restart starts from a seeded random subset (each node kept with
    probability 1/2) and repeatedly applies the best strictly improving
    single move among add/remove/swap.  The best final set across restarts
    is returned, ties resolved toward smaller sets and then lexicographic
    node order.
    """
    if restarts < 1:
        raise ValueError("restarts must be positive")
    d = np.asarray(problem.d, dtype=float)
    m = d.shape[0]
    best_key = None
    best_nodes = None
    for r in range(restarts):
        rng = np.random.default_rng([int(seed), r])
        start = rng.random(m) < 0.5
        members = _climb(d, start, problem.eta)
        nodes = [int(v) for v in np.flatnonzero(members)]
        score = subgraph_score(d, nodes, problem.eta)
        key = (-score, len(nodes), tuple(nodes))
        if best_key is None or key < best_key:
            best_key = key
            best_nodes = nodes
    return best_nodes


def brute_force(problem: ContrastProblem):
    """Exhaustive optimum over all node subsets (guarded by size).

    Ties are resolved toward smaller sets, then lexicographic node order.
    """
    d = np.asarray(problem.d, dtype=float)
    m = d.shape[0]
    if m > BRUTE_FORCE_LIMIT:
        raise TooLarge(
            f"{m} nodes exceeds the exhaustive limit of {BRUTE_FORCE_LIMIT}"
        )
    eta = problem.eta
    n_masks = 1 << m
    chunk = 1 << 14
    bit_cols = np.arange(m, dtype=np.uint32)
    best_key = None
    best_nodes = None
    for lo in range(0, n_masks, chunk):
        masks = np.arange(lo, min(lo + chunk, n_masks), dtype=np.uint32)
        bits = ((masks[:, None] >> bit_cols[None, :]) & 1).astype(float)
        sizes = bits.sum(axis=1)
        scores = ((bits @ d) * bits).sum(axis=1) - eta * sizes**2
        top = scores.max()
        for pos in np.flatnonzero(scores == top):
            nodes = [int(v) for v in np.flatnonzero(bits[pos])]
            key = (-float(top), len(nodes), tuple(nodes))
            if best_key is None or key < best_key:
                best_key = key
                best_nodes = nodes
    return best_nodes


def extract_subgraph(
    nodes, g_a: np.ndarray, g_b: np.ndarray, tau: float = 0.0, eta: float = 0.02
) -> ContrastSubgraph:
    """Materialize a node set as a weighted edge list.

    Edges keep pairs (i < j, both in ``nodes``) whose absolute template
    difference exceeds ``tau``; weights are those absolute differences.
    """
    d = contrast_matrix(g_a, g_b)
    _check_nodes(nodes, d.shape[0])
    nodes = sorted(int(v) for v in nodes)
    edges = []
    for ai, i in enumerate(nodes):
        for j in nodes[ai + 1 :]:
            w = abs(float(d[i, j]))
            if w > tau:
                edges.append((i, j, w))
    score = subgraph_score(d, nodes, eta)
    return ContrastSubgraph(nodes, edges, score, eta, tau)


def write_subgraph_json(
    sub: ContrastSubgraph,
    path,
    group_a: int,
    group_b: int,
    restarts: int,
    seed: int,
    node_names=None,
) -> None:
    doc = {
        "group_a": int(group_a),
        "group_b": int(group_b),
        "eta": float(sub.eta),
        "tau": float(sub.tau),
        "restarts": int(restarts),
        "seed": int(seed),
        "nodes": [int(v) for v in sub.nodes],
        "node_names": (
            [str(node_names[v]) for v in sub.nodes] if node_names else None
        ),
        "edges": [[int(i), int(j), float(w)] for i, j, w in sub.edges],
        "score": float(sub.score),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_subgraph_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"subgraph file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"cannot parse subgraph file {path}: {exc}") from exc
    required = {
        "group_a", "group_b", "eta", "tau", "restarts", "seed",
        "nodes", "node_names", "edges", "score",
    }
    missing = required - doc.keys()
    if missing:
        raise DataFormatError(
            f"subgraph file {path} is missing keys {sorted(missing)}"
        )
    return doc
