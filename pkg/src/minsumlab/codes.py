"""Tanner graphs, alist parsing/serialization and syndrome checks.

A Tanner graph is the bipartite graph of an LDPC code: variable nodes are
codeword bits, check nodes are parity equations.  Graphs are immutable after
construction and may be shared freely across threads.

Both the padded (fixed-width rows with trailing zeros) and unpadded alist
dialects are accepted, since files in the wild use either.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "AlistError",
    "EnsembleSpec",
    "TannerGraph",
    "parse_alist",
    "to_alist",
    "random_regular_graph",
    "syndrome_ok",
]


class AlistError(ValueError):
    """Malformed or inconsistent alist content."""


@dataclass(frozen=True)
class EnsembleSpec:
    """Regular LDPC ensemble: variable degree, check degree, code length."""

    var_degree: int
    chk_degree: int
    n_vars: int

    def __post_init__(self) -> None:
        if self.var_degree < 1 or self.chk_degree < 1 or self.n_vars < 1:
            raise ValueError("degrees and length must be positive")
        if (self.n_vars * self.var_degree) % self.chk_degree != 0:
            raise ValueError(
                f"{self.n_vars}*{self.var_degree} edges not divisible by "
                f"check degree {self.chkdeg_str()}"
            )

    def chkdeg_str(self) -> str:
        return str(self.chk_degree)

    @property
    def n_checks(self) -> int:
        return self.n_vars * self.var_degree // self.chk_degree


class TannerGraph:
    """Bipartite code graph with mutually consistent adjacency lists.

    Edges are numbered by iterating variables in order and each variable's
    check list in order; per-node edge index matrices grouped by degree are
    precomputed for the vectorized decoder.
    """

    def __init__(self, var_adj: list[list[int]], n_checks: int):
        self.n_vars = len(var_adj)
        self.n_checks = n_checks
        self.var_adj = tuple(np.asarray(row, dtype=np.int64) for row in var_adj)

        chk_rows: list[list[int]] = [[] for _ in range(n_checks)]
        chk_edge_rows: list[list[int]] = [[] for _ in range(n_checks)]
        var_edge_rows: list[list[int]] = []
        edge_var: list[int] = []
        edge_chk: list[int] = []
        eid = 0
        for n, row in enumerate(self.var_adj):
            seen = set()
            edges_here = []
            for m in row.tolist():
                if not 0 <= m < n_checks:
                    raise ValueError(f"variable {n} references check {m} out of range")
                if m in seen:
                    raise ValueError(f"variable {n} connects to check {m} twice")
                seen.add(m)
                chk_rows[m].append(n)
                chk_edge_rows[m].append(eid)
                edges_here.append(eid)
                edge_var.append(n)
                edge_chk.append(m)
                eid += 1
            var_edge_rows.append(edges_here)
        self.n_edges = eid
        self.chk_adj = tuple(np.asarray(r, dtype=np.int64) for r in chk_rows)
        self.edge_var = np.asarray(edge_var, dtype=np.int64)
        self.edge_chk = np.asarray(edge_chk, dtype=np.int64)
        self._var_edge_rows = var_edge_rows
        self._chk_edge_rows = chk_edge_rows
        self.var_groups = _degree_groups(var_edge_rows)
        self.chk_groups = _degree_groups(chk_edge_rows)

    @property
    def var_degrees(self) -> np.ndarray:
        return np.array([len(r) for r in self.var_adj])

    @property
    def chk_degrees(self) -> np.ndarray:
        return np.array([len(r) for r in self.chk_adj])

    def is_regular(self) -> bool:
        vd, cd = self.var_degrees, self.chk_degrees
        return bool(len(np.unique(vd)) == 1 and len(np.unique(cd)) == 1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TannerGraph):
            return NotImplemented
        return (
            self.n_vars == other.n_vars
            and self.n_checks == other.n_checks
            and all(np.array_equal(a, b) for a, b in zip(self.var_adj, other.var_adj))
        )


def _degree_groups(edge_rows: list[list[int]]) -> list[tuple[np.ndarray, np.ndarray]]:
    """Group node edge lists by degree: (node_ids, edge matrix of shape (n, d))."""
    by_deg: dict[int, list[int]] = {}
    for idx, row in enumerate(edge_rows):
        by_deg.setdefault(len(row), []).append(idx)
    groups = []
    for d in sorted(by_deg):
        if d == 0:
            continue
        ids = np.asarray(by_deg[d], dtype=np.int64)
        mat = np.asarray([edge_rows[i] for i in by_deg[d]], dtype=np.int64)
        groups.append((ids, mat))
    return groups


def _ints(tokens: list[str], line_no: int) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError as exc:
        raise AlistError(f"line {line_no}: non-integer token ({exc})") from None


def parse_alist(text: str) -> TannerGraph:
    """Parse alist text into a validated Tanner graph.

    Raises :class:`AlistError` with a line number for malformed headers,
    out-of-range indices or row/column inconsistencies.  Zero entries inside
    adjacency rows (padding) are ignored.
    """
    lines = text.splitlines()
    rows: list[tuple[int, list[str]]] = [
        (i + 1, line.split()) for i, line in enumerate(lines) if line.strip()
    ]
    if len(rows) < 4:
        raise AlistError("truncated alist: fewer than 4 content lines")

    ln, toks = rows[0]
    if len(toks) != 2:
        raise AlistError(f"line {ln}: header must be 'n_vars n_checks'")
    n_vars, n_checks = _ints(toks, ln)
    if n_vars < 1 or n_checks < 1:
        raise AlistError(f"line {ln}: dimensions must be positive")

    ln, toks = rows[1]
    if len(toks) != 2:
        raise AlistError(f"line {ln}: expected 'max_var_degree max_chk_degree'")
    max_vd, max_cd = _ints(toks, ln)

    ln, toks = rows[2]
    var_degs = _ints(toks, ln)
    if len(var_degs) != n_vars:
        raise AlistError(f"line {ln}: expected {n_vars} variable degrees, got {len(var_degs)}")
    ln, toks = rows[3]
    chk_degs = _ints(toks, ln)
    if len(chk_degs) != n_checks:
        raise AlistError(f"line {ln}: expected {n_checks} check degrees, got {len(chk_degs)}")
    if max(var_degs, default=0) > max_vd or max(chk_degs, default=0) > max_cd:
        raise AlistError("declared maximum degrees are smaller than the degree lists")

    body = rows[4:]
    if len(body) != n_vars + n_checks:
        raise AlistError(
            f"expected {n_vars + n_checks} adjacency rows, got {len(body)}"
        )

    var_adj: list[list[int]] = []
    for n in range(n_vars):
        ln, toks = body[n]
        entries = [e for e in _ints(toks, ln) if e != 0]
        if len(entries) != var_degs[n]:
            raise AlistError(
                f"line {ln}: variable {n + 1} lists {len(entries)} checks, "
                f"declared degree is {var_degs[n]}"
            )
        for e in entries:
            if not 1 <= e <= n_checks:
                raise AlistError(f"line {ln}: check index {e} out of range 1..{n_checks}")
        var_adj.append([e - 1 for e in entries])

    # cross-check the check-side rows against the variable-side adjacency
    from_vars: list[set[int]] = [set() for _ in range(n_checks)]
    for n, row in enumerate(var_adj):
        for m in row:
            from_vars[m].add(n)
    for m in range(n_checks):
        ln, toks = body[n_vars + m]
        entries = [e for e in _ints(toks, ln) if e != 0]
        if len(entries) != chk_degs[m]:
            raise AlistError(
                f"line {ln}: check {m + 1} lists {len(entries)} variables, "
                f"declared degree is {chk_degs[m]}"
            )
        for e in entries:
            if not 1 <= e <= n_vars:
                raise AlistError(f"line {ln}: variable index {e} out of range 1..{n_vars}")
        listed = {e - 1 for e in entries}
        if listed != from_vars[m]:
            raise AlistError(
                f"line {ln}: check {m + 1} adjacency disagrees with the variable rows"
            )

    return TannerGraph(var_adj, n_checks)


def to_alist(graph: TannerGraph) -> str:
    """Serialize a graph in the padded alist dialect (1-based, zero-padded)."""
    vd = graph.var_degrees
    cd = graph.chk_degrees
    max_vd, max_cd = int(vd.max()), int(cd.max())
    out = [f"{graph.n_vars} {graph.n_checks}", f"{max_vd} {max_cd}"]
    out.append(" ".join(str(d) for d in vd))
    out.append(" ".join(str(d) for d in cd))
    for row in graph.var_adj:
        ent = [str(m + 1) for m in row.tolist()]
        ent += ["0"] * (max_vd - len(ent))
        out.append(" ".join(ent))
    for row in graph.chk_adj:
        ent = [str(n + 1) for n in row.tolist()]
        ent += ["0"] * (max_cd - len(ent))
        out.append(" ".join(ent))
    return "\n".join(out) + "\n"


def _four_cycle_edges(var_of: np.ndarray, chk_of: np.ndarray, n_checks: int) -> list[int]:
    """Edge indices witnessing 4-cycles (two variables sharing two checks)."""
    order = np.argsort(chk_of, kind="stable")
    seen: dict[tuple[int, int], int] = {}
    offenders: list[int] = []
    start = 0
    srt_chk = chk_of[order]
    for stop in range(1, len(order) + 1):
        if stop == len(order) or srt_chk[stop] != srt_chk[start]:
            members = order[start:stop]
            for a in range(len(members)):
                for b in range(a + 1, len(members)):
                    va, vb = int(var_of[members[a]]), int(var_of[members[b]])
                    key = (va, vb) if va < vb else (vb, va)
                    if key in seen:
                        offenders.append(int(members[b]))
                    else:
                        seen[key] = int(members[b])
            start = stop
    return offenders


def random_regular_graph(
    spec: EnsembleSpec,
    rng: np.random.Generator,
    max_fix_rounds: int = 20_000,
    avoid_4cycles: bool = False,
) -> TannerGraph:
    """Configuration-model (var_degree, chk_degree)-regular graph without parallel edges.

    Variable and check sockets are paired by a random permutation; colliding
    (parallel) edges, and with `avoid_4cycles` also 4-cycles, are repaired by
    swapping an offending check socket with a random one, for a bounded number
    of rounds.  No further girth optimization is attempted.
    """
    n_edges = spec.n_vars * spec.var_degree
    var_of = np.repeat(np.arange(spec.n_vars), spec.var_degree)
    chk_of = np.repeat(np.arange(spec.n_checks), spec.chk_degree)
    chk_of = chk_of[rng.permutation(n_edges)]

    for _ in range(max_fix_rounds):
        pairs = var_of * spec.n_checks + chk_of
        order = np.argsort(pairs, kind="stable")
        dup = np.nonzero(np.diff(pairs[order]) == 0)[0]
        offenders = order[dup].tolist()
        if not offenders and avoid_4cycles:
            offenders = _four_cycle_edges(var_of, chk_of, spec.n_checks)
        if not offenders:
            break
        for i in offenders:
            j = int(rng.integers(0, n_edges))
            chk_of[i], chk_of[j] = chk_of[j], chk_of[i]
    else:
        raise RuntimeError("failed to remove graph defects within the retry budget")

    var_adj: list[list[int]] = [[] for _ in range(spec.n_vars)]
    for v, c in zip(var_of.tolist(), chk_of.tolist()):
        var_adj[v].append(c)
    return TannerGraph(var_adj, spec.n_checks)


def syndrome_ok(graph: TannerGraph, x_hat) -> bool:
    """True iff every check's sign product over its neighbors is +1."""
    x = np.asarray(x_hat)
    if x.shape != (graph.n_vars,):
        raise ValueError(f"expected {graph.n_vars} symbols, got shape {x.shape}")
    bits = (x < 0).astype(np.int64)
    parity = np.bincount(graph.edge_chk, weights=bits[graph.edge_var], minlength=graph.n_checks)
    return bool(np.all(parity.astype(np.int64) % 2 == 0))
