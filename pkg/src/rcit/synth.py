"""Synthetic data: post non-linear models, random DAG data, and a discrete counterexample."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NONLINEARITIES = {
    "identity": lambda u: u,
    "square": np.square,
    "cube": lambda u: u**3,
    "tanh": np.tanh,
    # exp(-||u||_2) evaluated on scalars
    "negexp": lambda u: np.exp(-np.abs(u)),
}
NONLINEARITY_TAGS = tuple(NONLINEARITIES)

EPS_SHARED_VAR = 1.0 / 16.0


def sample_nonlinearity(rng: np.random.Generator) -> str:
    return NONLINEARITY_TAGS[rng.integers(len(NONLINEARITY_TAGS))]


def apply_nonlinearity(tag: str, u):
    return NONLINEARITIES[tag](u)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Generator for trial ``trial`` of a run rooted at ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([seed, trial]))


def gen_pnl_null(n: int, k: int, rng: np.random.Generator, funcs: tuple[str, str] | None = None):
    """``X = g1(mean(Z) + e1)``, ``Y = g2(mean(Z) + e2)``: X and Y independent given Z.

    Returns ``(x, y, z)`` with shapes ``(n, 1)``, ``(n, 1)``, ``(n, k)``.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    g1, g2 = funcs or (sample_nonlinearity(rng), sample_nonlinearity(rng))
    z = rng.standard_normal((n, k))
    e = rng.standard_normal((n, 2))
    zbar = z.mean(axis=1)
    x = apply_nonlinearity(g1, zbar + e[:, 0])
    y = apply_nonlinearity(g2, zbar + e[:, 1])
    return x[:, None], y[:, None], z


def gen_pnl_alt(n: int, k: int, rng: np.random.Generator, funcs: tuple[str, str] | None = None):
    """``X = g1(eb + e1)``, ``Y = g2(eb + e2)`` with a hidden shared ``eb ~ N(0, 1/16)``.

    ``Z ~ N(0, I_k)`` is independent of both, so X and Y stay dependent given Z.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    g1, g2 = funcs or (sample_nonlinearity(rng), sample_nonlinearity(rng))
    eb = rng.normal(0.0, np.sqrt(EPS_SHARED_VAR), n)
    e = rng.standard_normal((n, 2))
    z = rng.standard_normal((n, k))
    x = apply_nonlinearity(g1, eb + e[:, 0])
    y = apply_nonlinearity(g2, eb + e[:, 1])
    return x[:, None], y[:, None], z


@dataclass
class Dag:
    """Weighted DAG; ``weights[i, j] != 0`` means an edge ``j -> i``.

    Support is strictly lower triangular, so vertex order is a topological order.
    """

    weights: np.ndarray
    vertex_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        v = self.weights.shape[0]
        if self.weights.shape != (v, v):
            raise ValueError("weights must be square")
        if not self.vertex_names:
            self.vertex_names = [f"X{i + 1}" for i in range(v)]
        if len(self.vertex_names) != v:
            raise ValueError("vertex_names length mismatch")

    @property
    def num_vertices(self) -> int:
        return self.weights.shape[0]

    @property
    def adjacency(self) -> np.ndarray:
        """Boolean ``adj[p, c]`` true for an edge ``p -> c``."""
        return (self.weights != 0).T

    def parents(self, i: int) -> list[int]:
        return [int(j) for j in np.nonzero(self.weights[i])[0]]

    def children(self, j: int) -> list[int]:
        return [int(i) for i in np.nonzero(self.weights[:, j])[0]]

    def num_edges(self) -> int:
        return int(np.count_nonzero(self.weights))

    def is_acyclic(self) -> bool:
        adj = self.adjacency.copy()
        remaining = np.ones(len(adj), dtype=bool)
        while remaining.any():
            sources = remaining & ~adj[remaining].any(axis=0)
            if not sources.any():
                return False
            remaining &= ~sources
            adj[sources] = False
        return True

    @classmethod
    def from_edges(cls, v: int, edges, names=None) -> "Dag":
        """DAG from ``(parent, child)`` pairs (unit weights); any order allowed."""
        w = np.zeros((v, v))
        for p, c in edges:
            w[c, p] = 1.0
        return cls(w, list(names) if names else [])


def gen_random_dag(v: int, expected_neighbors: float, rng: np.random.Generator) -> Dag:
    """Lower-triangular Bernoulli(E[N]/(v-1)) edges, weights from +-[0.1, 1]."""
    if v < 2 or not 0 < expected_neighbors <= v - 1:
        raise ValueError("need v >= 2 and 0 < expected_neighbors <= v - 1")
    prob = expected_neighbors / (v - 1)
    mask = np.tril(rng.random((v, v)) < prob, k=-1)
    mags = rng.uniform(0.1, 1.0, (v, v))
    signs = np.where(rng.random((v, v)) < 0.5, -1.0, 1.0)
    return Dag(np.where(mask, signs * mags, 0.0))


def simulate_dag_data(dag: Dag, n: int, nonlinear: bool, rng: np.random.Generator,
                      tags: list[str] | None = None) -> tuple[np.ndarray, list[str]]:
    """Linear Gaussian SEM in topological order, optionally post-transformed per column.

    Returns ``(data, tags)``; ``tags`` lists the nonlinearity applied to each
    column (all ``"identity"`` when ``nonlinear`` is false). Passing ``tags``
    fixes the transforms instead of sampling them.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    v = dag.num_vertices
    eps = rng.standard_normal((n, v))
    x = np.zeros((n, v))
    for i in range(v):
        x[:, i] = x @ dag.weights[i] + eps[:, i]
    if not nonlinear:
        return x, ["identity"] * v
    if tags is None:
        tags = [sample_nonlinearity(rng) for _ in range(v)]
    for i, tag in enumerate(tags):
        x[:, i] = apply_nonlinearity(tag, x[:, i])
    return x, list(tags)


def apply_latent_and_selection(data: np.ndarray, dag: Dag, rng: np.random.Generator,
                               num_latent: int | None = None,
                               num_selection: int | None = None) -> tuple[np.ndarray, dict]:
    """Hide 0-3 common causes and truncate on 0-3 colliders.

    Latents are vertices with at least two children; selection variables are
    vertices with at least two parents among the remaining ones. For each
    selection variable the rows below its q-quantile are dropped,
    ``q ~ Uniform(0.1, 0.5)``. Counts are drawn uniformly from 0..3 unless
    given, and capped by the number of eligible vertices.
    """
    data = np.asarray(data, dtype=float)
    v = dag.num_vertices
    if data.shape[1] != v:
        raise ValueError("data columns do not match the DAG")
    n_lat = int(rng.integers(0, 4)) if num_latent is None else num_latent
    n_sel = int(rng.integers(0, 4)) if num_selection is None else num_selection
    eligible_lat = [i for i in range(v) if len(dag.children(i)) >= 2]
    latents = sorted(int(i) for i in rng.choice(eligible_lat, size=min(n_lat, len(eligible_lat)), replace=False)) if eligible_lat else []
    eligible_sel = [i for i in range(v) if i not in latents and len(dag.parents(i)) >= 2]
    selection = sorted(int(i) for i in rng.choice(eligible_sel, size=min(n_sel, len(eligible_sel)), replace=False)) if eligible_sel else []
    keep = np.ones(data.shape[0], dtype=bool)
    quantiles = {}
    for s in selection:
        q = float(rng.uniform(0.1, 0.5))
        quantiles[s] = q
        keep &= data[:, s] >= np.quantile(data[:, s], q)
    observed = [i for i in range(v) if i not in latents]
    meta = {
        "latents": latents,
        "latent_names": [dag.vertex_names[i] for i in latents],
        "selection": selection,
        "selection_quantiles": {str(k): q for k, q in quantiles.items()},
        "observed": observed,
        "rows_before": int(data.shape[0]),
        "rows_after": int(keep.sum()),
    }
    return data[keep][:, observed], meta


@dataclass(frozen=True)
class DiscreteJoint:
    """Joint distribution of binary (X, Y, Z) as ``p[x, y, z]``."""

    p: np.ndarray

    def p_z(self) -> np.ndarray:
        return self.p.sum(axis=(0, 1))

    def p_xy(self) -> np.ndarray:
        return self.p.sum(axis=2)

    def p_xy_given_z(self, z: int) -> np.ndarray:
        return self.p[:, :, z] / self.p_z()[z]

    def p_x_given_z(self, z: int) -> np.ndarray:
        return self.p_xy_given_z(z).sum(axis=1)

    def p_y_given_z(self, z: int) -> np.ndarray:
        return self.p_xy_given_z(z).sum(axis=0)

    def mixture_of_products(self) -> np.ndarray:
        """``sum_z P(z) P(x|z) P(y|z)`` as a 2x2 table."""
        pz = self.p_z()
        return sum(pz[z] * np.outer(self.p_x_given_z(z), self.p_y_given_z(z)) for z in range(2))


def table1_joint() -> DiscreteJoint:
    """Binary joint where X and Y are dependent given Z yet the mixture of
    conditional products equals the marginal of (X, Y)."""
    pz = np.array([0.2, 0.8])
    # P(x, y | z) indexed [x, y]
    given_z0 = np.array([[0.2, 0.3], [0.1, 0.4]])
    given_z1 = np.array([[0.1075, 0.1925], [0.2925, 0.4075]])
    p = np.stack([pz[0] * given_z0, pz[1] * given_z1], axis=2)
    return DiscreteJoint(p)
