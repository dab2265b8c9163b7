"""PC-stable causal discovery, d-separation, and structural Hamming distance."""

from __future__ import annotations

import csv
import io
import json
import time
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from rcit import citest
from rcit.synth import Dag, gen_random_dag, simulate_dag_data, trial_rng

CIFunction = Callable[[int, int, tuple], float]


@dataclass
class Cpdag:
    """Partially directed graph stored as a 0/1 mark matrix.

    ``amat[i, j] == amat[j, i] == 1`` is an undirected edge ``i - j``;
    ``amat[i, j] == 1, amat[j, i] == 0`` is a directed edge ``i -> j``.
    """

    amat: np.ndarray
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.amat = np.asarray(self.amat, dtype=np.int8)
        v = self.amat.shape[0]
        if self.amat.shape != (v, v) or np.any(np.diag(self.amat)):
            raise ValueError("amat must be square with an empty diagonal")
        if not self.names:
            self.names = [f"X{i + 1}" for i in range(v)]

    @property
    def num_vertices(self) -> int:
        return self.amat.shape[0]

    def status(self, i: int, j: int) -> int:
        """0 absent, 1 undirected, 2 ``i -> j``, 3 ``j -> i``."""
        a, b = self.amat[i, j], self.amat[j, i]
        if a and b:
            return 1
        if a:
            return 2
        if b:
            return 3
        return 0

    def edges(self) -> list[tuple[int, int, str]]:
        out = []
        for i, j in combinations(range(self.num_vertices), 2):
            s = self.status(i, j)
            if s == 1:
                out.append((i, j, "undirected"))
            elif s == 2:
                out.append((i, j, "directed"))
            elif s == 3:
                out.append((j, i, "directed"))
        return out

    def to_json(self) -> dict:
        return {
            "num_vertices": self.num_vertices,
            "names": list(self.names),
            "edges": [{"from": self.names[a], "to": self.names[b], "mark": m}
                      for a, b, m in self.edges()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Cpdag":
        names = list(obj["names"])
        index = {nm: i for i, nm in enumerate(names)}
        amat = np.zeros((len(names), len(names)), dtype=np.int8)
        for e in obj["edges"]:
            a, b = index[e["from"]], index[e["to"]]
            amat[a, b] = 1
            if e["mark"] == "undirected":
                amat[b, a] = 1
        return cls(amat, names)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([""] + self.names)
        for nm, row in zip(self.names, self.amat):
            w.writerow([nm] + [int(v) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Cpdag":
        rows = list(csv.reader(io.StringIO(text)))
        names = rows[0][1:]
        amat = np.array([[int(v) for v in r[1:]] for r in rows[1:]], dtype=np.int8)
        return cls(amat, names)


def dag_to_json(dag: Dag) -> dict:
    names = dag.vertex_names
    edges = []
    for c in range(dag.num_vertices):
        for p in dag.parents(c):
            edges.append({"from": names[p], "to": names[c], "mark": "directed",
                          "weight": float(dag.weights[c, p])})
    return {"num_vertices": dag.num_vertices, "names": list(names), "edges": edges}


def dag_from_json(obj: dict) -> Dag:
    """Inverse of :func:`dag_to_json`; raises ``ValueError`` for cyclic or undirected input.

    Vertex order need not be topological; the weight matrix is indexed by
    ``names`` order and acyclicity is checked explicitly.
    """
    names = list(obj["names"])
    index = {nm: i for i, nm in enumerate(names)}
    w = np.zeros((len(names), len(names)))
    for e in obj["edges"]:
        if e.get("mark", "directed") != "directed":
            raise ValueError("a DAG may only contain directed edges")
        w[index[e["to"]], index[e["from"]]] = e.get("weight", 1.0)
    dag = Dag.__new__(Dag)
    dag.weights = w
    dag.vertex_names = names
    if not dag.is_acyclic():
        raise ValueError("graph contains a directed cycle")
    return dag


def _ancestors(dag: Dag, nodes) -> set[int]:
    seen = set(nodes)
    stack = list(nodes)
    while stack:
        c = stack.pop()
        for p in dag.parents(c):
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return seen


def d_separated(dag: Dag, x: int, y: int, z=()) -> bool:
    """True iff every path between ``x`` and ``y`` is blocked by ``z``.

    Reachability search over (vertex, direction) states: a trail may pass a
    collider only if it is an ancestor of ``z``, and a non-collider only if
    it is outside ``z``.
    """
    v = dag.num_vertices
    z = set(int(i) for i in z)
    for node in (x, y, *z):
        if not 0 <= node < v:
            raise ValueError(f"invalid vertex index {node}")
    if x == y or x in z or y in z:
        raise ValueError("x and y must differ and lie outside z")
    anc_z = _ancestors(dag, z)
    # direction "up": reached from a child; "down": reached from a parent
    queue = deque([(x, "up")])
    visited = set()
    while queue:
        node, direction = queue.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node == y:
            return False
        if direction == "up" and node not in z:
            for p in dag.parents(node):
                queue.append((p, "up"))
            for c in dag.children(node):
                queue.append((c, "down"))
        elif direction == "down":
            if node not in z:
                for c in dag.children(node):
                    queue.append((c, "down"))
            if node in anc_z:
                for p in dag.parents(node):
                    queue.append((p, "up"))
    return True


def oracle_ci(dag: Dag) -> CIFunction:
    """CI function returning p = 1 for d-separation and p = 0 otherwise."""
    return lambda i, j, s: 1.0 if d_separated(dag, i, j, s) else 0.0


def data_ci(data: np.ndarray, test: str = "rcot", cfg: citest.CITestConfig | None = None) -> CIFunction:
    """CI function running ``test`` on columns of ``data``."""
    data = np.asarray(data, dtype=float)
    cfg = cfg or citest.CITestConfig()

    def ci(i, j, s):
        z = data[:, list(s)] if s else None
        return citest.run_test(test, data[:, i], data[:, j], z, cfg).p_value

    return ci


def _orient_colliders(amat: np.ndarray, sepsets: dict, order: list[int]) -> None:
    v = amat.shape[0]
    arrow = np.zeros_like(amat, dtype=bool)   # arrow[i, k]: arrowhead at k on edge i - k
    for k in order:
        nbrs = [i for i in order if amat[i, k] and amat[k, i]]
        for a, b in combinations(nbrs, 2):
            if amat[a, b] or amat[b, a]:
                continue
            if k not in sepsets.get(frozenset((a, b)), ()):
                arrow[a, k] = True
                arrow[b, k] = True
    for i in range(v):
        for k in range(v):
            if arrow[i, k] and not arrow[k, i]:
                amat[k, i] = 0
    # edges with arrowheads requested at both ends stay undirected


def _meek(amat: np.ndarray, order: list[int]) -> None:
    def und(a, b):
        return amat[a, b] and amat[b, a]

    def directed(a, b):
        return amat[a, b] and not amat[b, a]

    def adjacent(a, b):
        return amat[a, b] or amat[b, a]

    changed = True
    while changed:
        changed = False
        for a in order:
            for b in order:
                if a == b or not und(a, b):
                    continue
                # R1: c -> a - b with c, b non-adjacent
                if any(directed(c, a) and not adjacent(c, b) for c in order if c not in (a, b)):
                    amat[b, a] = 0
                    changed = True
                    continue
                # R2: a -> c -> b with a - b
                if any(directed(a, c) and directed(c, b) for c in order if c not in (a, b)):
                    amat[b, a] = 0
                    changed = True
                    continue
                # R3: a - c -> b, a - d -> b, c and d non-adjacent
                cands = [c for c in order if c not in (a, b) and und(a, c) and directed(c, b)]
                if any(not adjacent(c, d) for c, d in combinations(cands, 2)):
                    amat[b, a] = 0
                    changed = True


def pc(ci: CIFunction, num_vertices: int, alpha: float = 0.05, names: Sequence[str] | None = None,
       max_cond: int | None = None) -> tuple[Cpdag, dict]:
    """PC-stable skeleton search followed by collider orientation and Meek's rules.

    ``ci(i, j, s)`` returns a p-value for ``i`` independent of ``j`` given the
    tuple ``s``. Candidate sets and rule sweeps follow the order of ``names``
    (sorted), so the output does not depend on column order.
    Returns the graph and the separating sets keyed by ``frozenset({i, j})``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    v = num_vertices
    names = list(names) if names else [f"X{i + 1}" for i in range(v)]
    order = sorted(range(v), key=lambda i: names[i])
    rank = {node: r for r, node in enumerate(order)}
    max_cond = v - 2 if max_cond is None else max_cond
    adj = np.ones((v, v), dtype=np.int8) - np.eye(v, dtype=np.int8)
    sepsets: dict[frozenset, tuple] = {}
    level = 0
    while level <= max_cond:
        snapshot = {i: sorted((j for j in range(v) if adj[i, j]), key=rank.get) for i in range(v)}
        if all(len(snapshot[i]) - 1 < level for i in range(v)):
            break
        for i in order:
            for j in snapshot[i]:
                if not adj[i, j]:
                    continue
                others = [k for k in snapshot[i] if k != j]
                if len(others) < level:
                    continue
                for s in combinations(others, level):
                    if ci(i, j, tuple(s)) > alpha:
                        adj[i, j] = adj[j, i] = 0
                        sepsets[frozenset((i, j))] = tuple(sorted(s))
                        break
        level += 1
    amat = adj.copy()
    _orient_colliders(amat, sepsets, order)
    _meek(amat, order)
    return Cpdag(amat, names), sepsets


def true_cpdag(dag: Dag) -> Cpdag:
    """CPDAG of ``dag`` built directly: skeleton, unshielded colliders, then Meek's rules.

    This does not run PC, so comparing it with oracle PC output checks PC.
    """
    adj = dag.adjacency.astype(np.int8)
    amat = adj | adj.T
    for c in range(dag.num_vertices):
        for a, b in combinations(dag.parents(c), 2):
            if not amat[a, b]:
                amat[c, a] = 0
                amat[c, b] = 0
    order = sorted(range(dag.num_vertices), key=lambda i: dag.vertex_names[i])
    _meek(amat, order)
    return Cpdag(amat, list(dag.vertex_names))


def structural_hamming_distance(g1: Cpdag, g2: Cpdag) -> int:
    """Number of vertex pairs whose edge status (absent, undirected, either direction) differs."""
    if g1.num_vertices != g2.num_vertices:
        raise ValueError("graphs have different vertex counts")
    return sum(g1.status(i, j) != g2.status(i, j)
               for i, j in combinations(range(g1.num_vertices), 2))


def _mean_ci(values) -> dict:
    a = np.asarray(values, dtype=float)
    half = float(stats.t.ppf(0.975, a.size - 1) * a.std(ddof=1) / np.sqrt(a.size)) if a.size > 1 else 0.0
    return {"mean": float(a.mean()), "ci95": [float(a.mean()) - half, float(a.mean()) + half]}


def run_discovery_experiment(num_dags: int = 50, v: int = 20, expected_neighbors: float = 2.0,
                             n: int = 500, tests=("rcot", "fisher-z"), alpha: float = 0.05,
                             seed: int = 0, nonlinear: bool = True) -> dict:
    """PC with each test on simulated DAG data, scored against the oracle CPDAG.

    Returns per-test SHD lists with means and 95% intervals, plus the SHDs of
    PC run with the d-separation oracle (zero when PC is correct).
    """
    if num_dags < 10:
        raise ValueError("num_dags must be >= 10")
    shd = {t: [] for t in tests}
    runtime = {t: [] for t in tests}
    oracle_shd = []
    for d in range(num_dags):
        rng = trial_rng(seed, d)
        dag = gen_random_dag(v, expected_neighbors, rng)
        data, _ = simulate_dag_data(dag, n, nonlinear, rng)
        truth = true_cpdag(dag)
        oracle_graph, _ = pc(oracle_ci(dag), v, alpha, dag.vertex_names)
        oracle_shd.append(structural_hamming_distance(oracle_graph, truth))
        cfg = citest.CITestConfig(seed=int(rng.integers(2**31)))
        for t in tests:
            t0 = time.perf_counter()
            graph, _ = pc(data_ci(data, t, cfg), v, alpha, dag.vertex_names)
            runtime[t].append(time.perf_counter() - t0)
            shd[t].append(structural_hamming_distance(graph, truth))
    return {
        "design": {"num_dags": num_dags, "v": v, "expected_neighbors": expected_neighbors,
                   "n": n, "alpha": alpha, "seed": seed, "nonlinear": nonlinear},
        "oracle_shd": oracle_shd,
        "shd": shd,
        "summary": {t: {"shd": _mean_ci(shd[t]), "runtime": _mean_ci(runtime[t])} for t in tests},
    }
