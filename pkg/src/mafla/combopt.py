"""MaxCut and minimum vertex cover as continuous-relaxation sampling targets:
graph generation, closed-form relaxation scores, and discrete decoding.

MaxCut relaxes x in {-1,1}^n to y = tanh(u) with energy E(u) = y^T W y / 2 and
target density proportional to exp(-E/temperature); vertex cover relaxes
x in {0,1}^n to p = sigmoid(u) with a soft cardinality term plus an
uncovered-edge penalty.  Both scores are exact gradients, so the samplers run
on them directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .rng import as_generator


@dataclass
class Graph:
    n: int
    adjacency: np.ndarray
    edge_list: np.ndarray  # (m, 2), canonical i < j

    def __post_init__(self):
        A = np.asarray(self.adjacency, float)
        if A.shape != (self.n, self.n):
            raise ParameterError("adjacency shape mismatch")
        if not np.allclose(A, A.T) or np.any(np.diag(A) != 0):
            raise ParameterError("adjacency must be symmetric with zero diagonal")
        self.adjacency = A
        self.edge_list = np.asarray(self.edge_list, int).reshape(-1, 2)

    @property
    def n_edges(self):
        return self.edge_list.shape[0]


def _graph_from_edges(n, edges):
    A = np.zeros((n, n))
    edges = sorted({(min(i, j), max(i, j)) for i, j in edges})
    for i, j in edges:
        A[i, j] = A[j, i] = 1.0
    return Graph(n, A, np.array(edges, int).reshape(-1, 2))


def gen_er(n, p, rng) -> Graph:
    """Erdos-Renyi G(n, p): each i < j edge independently with probability p."""
    if not 0.0 < p < 1.0:
        raise ParameterError(f"edge probability must lie in (0, 1), got {p}")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    g = as_generator(rng)
    iu, ju = np.triu_indices(n, k=1)
    mask = g.random(len(iu)) < p
    return _graph_from_edges(n, zip(iu[mask], ju[mask]))


def gen_er_exact_edges(n, m, rng) -> Graph:
    """ER variant with exactly m edges (uniform over edge sets of that size)."""
    n_pairs = n * (n - 1) // 2
    if not 0 <= m <= n_pairs:
        raise ParameterError(f"m must lie in [0, {n_pairs}], got {m}")
    g = as_generator(rng)
    pick = g.choice(n_pairs, size=m, replace=False)
    iu, ju = np.triu_indices(n, k=1)
    return _graph_from_edges(n, zip(iu[pick], ju[pick]))


def gen_ba(n, m, rng) -> Graph:
    """Barabasi-Albert preferential attachment: seed clique on m+1 vertices,
    then each new vertex attaches to m distinct existing vertices with
    probability proportional to degree.  |E| = C(m+1, 2) + (n - m - 1) m."""
    if not 1 <= m < n:
        raise ParameterError(f"need 1 <= m < n, got m={m}, n={n}")
    g = as_generator(rng)
    edges = list(itertools.combinations(range(m + 1), 2))
    deg = np.zeros(n)
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
    for v in range(m + 1, n):
        targets = set()
        probs = deg[:v] / deg[:v].sum()
        while len(targets) < m:
            targets.add(int(g.choice(v, p=probs)))
        for t in sorted(targets):
            edges.append((t, v))
            deg[t] += 1
            deg[v] += 1
    return _graph_from_edges(n, edges)


def write_graph(path, graph: Graph):
    """Edge-list text format: header "n m", then one "i j" per line, 0-indexed."""
    with open(path, "w") as fh:
        fh.write(f"{graph.n} {graph.n_edges}\n")
        for i, j in graph.edge_list:
            fh.write(f"{i} {j}\n")


def read_graph(path) -> Graph:
    with open(path) as fh:
        header = fh.readline().split()
        n, m = int(header[0]), int(header[1])
        edges = [tuple(map(int, line.split())) for line in fh if line.strip()]
    if len(edges) != m:
        raise ParameterError(f"{path}: header claims {m} edges, found {len(edges)}")
    return _graph_from_edges(n, edges)


# --- MaxCut relaxation ---------------------------------------------------------

@dataclass
class MaxCutTarget:
    graph: Graph
    temperature: float = 0.5

    def __post_init__(self):
        if self.temperature <= 0:
            raise ParameterError("temperature must be positive")

    @property
    def dim(self):
        return self.graph.n

    def energy(self, u):
        return maxcut_energy(u, self)

    def score(self, u):
        return maxcut_score(u, self)

    def log_density(self, u):
        return -maxcut_energy(u, self) / self.temperature

    def to_json(self):
        return {"problem": "maxcut", "n": self.graph.n,
                "edges": self.graph.edge_list.tolist(),
                "temperature": self.temperature}


def maxcut_energy(u, target: MaxCutTarget):
    """E(u) = tanh(u)^T W tanh(u) / 2 with W the adjacency matrix."""
    u2 = np.atleast_2d(np.asarray(u, float))
    y = np.tanh(u2)
    e = 0.5 * np.sum((y @ target.graph.adjacency) * y, axis=1)
    return float(e[0]) if np.asarray(u).ndim == 1 else e


def maxcut_score(u, target: MaxCutTarget):
    """grad_u log pi(u) = -(1/temperature) (1 - tanh(u)^2) * (W tanh(u))."""
    u2 = np.atleast_2d(np.asarray(u, float))
    y = np.tanh(u2)
    grad_e = (1.0 - y * y) * (y @ target.graph.adjacency)
    s = -grad_e / target.temperature
    return s[0] if np.asarray(u).ndim == 1 else s


def sign_decode(u):
    """x = sgn(tanh(u)) in {-1, 1}^n with sgn(0) = +1."""
    u = np.asarray(u, float)
    return np.where(u >= 0, 1, -1).astype(int)


def cut_value(x, graph: Graph):
    """Number of edges cut by the partition x in {-1, 1}^n."""
    x2 = np.atleast_2d(np.asarray(x, int))
    if graph.n_edges == 0:
        z = np.zeros(x2.shape[0], dtype=int)
        return int(z[0]) if np.asarray(x).ndim == 1 else z
    i, j = graph.edge_list[:, 0], graph.edge_list[:, 1]
    cuts = ((1 - x2[:, i] * x2[:, j]) // 2).sum(axis=1)
    return int(cuts[0]) if np.asarray(x).ndim == 1 else cuts


def brute_force_maxcut(graph: Graph):
    """Exact optimum by enumeration (n <= 20); returns (best_cut, best_x)."""
    if graph.n > 20:
        raise ParameterError("brute force limited to n <= 20")
    n = graph.n
    bits = np.arange(2 ** (n - 1))  # fix x_0 = +1 by symmetry
    X = np.empty((len(bits), n), dtype=int)
    X[:, 0] = 1
    for k in range(1, n):
        X[:, k] = np.where((bits >> (k - 1)) & 1, 1, -1)
    cuts = cut_value(X, graph)
    best = int(np.argmax(cuts))
    return int(cuts[best]), X[best]


# --- vertex cover relaxation ----------------------------------------------------

@dataclass
class VCTarget:
    graph: Graph
    penalty: float = 2.0
    temperature: float = 0.5

    def __post_init__(self):
        if self.penalty <= 0 or self.temperature <= 0:
            raise ParameterError("penalty and temperature must be positive")

    @property
    def dim(self):
        return self.graph.n

    def energy(self, u):
        return vc_energy(u, self)

    def score(self, u):
        return vc_score(u, self)

    def log_density(self, u):
        return -vc_energy(u, self) / self.temperature

    def to_json(self):
        return {"problem": "vertex_cover", "n": self.graph.n,
                "edges": self.graph.edge_list.tolist(),
                "temperature": self.temperature, "penalty": self.penalty}


def _sigmoid(u):
    return np.where(u >= 0, 1.0 / (1.0 + np.exp(-np.abs(u))),
                    np.exp(-np.abs(u)) / (1.0 + np.exp(-np.abs(u))))


def vc_energy(u, target: VCTarget):
    """E(u) = 1^T p + (penalty/2) (1-p)^T A (1-p), p = sigmoid(u)."""
    u2 = np.atleast_2d(np.asarray(u, float))
    p = _sigmoid(u2)
    q = 1.0 - p
    e = p.sum(axis=1) + 0.5 * target.penalty * np.sum((q @ target.graph.adjacency) * q, axis=1)
    return float(e[0]) if np.asarray(u).ndim == 1 else e


def vc_score(u, target: VCTarget):
    """grad_u E = p(1-p) * (1 - penalty A (1-p)); score = -grad_u E / temperature."""
    u2 = np.atleast_2d(np.asarray(u, float))
    p = _sigmoid(u2)
    grad_e = p * (1.0 - p) * (1.0 - target.penalty * ((1.0 - p) @ target.graph.adjacency))
    s = -grad_e / target.temperature
    return s[0] if np.asarray(u).ndim == 1 else s


def greedy_decode_vc(u, graph: Graph):
    """Threshold x_i = 1{u_i > 0}, then repair: for every uncovered edge add
    the endpoint with larger sigmoid(u), ties to the lower vertex index."""
    u = np.asarray(u, float)
    x = (u > 0).astype(int)
    p = _sigmoid(u)
    for i, j in graph.edge_list:
        if x[i] == 0 and x[j] == 0:
            x[i if p[i] >= p[j] else j] = 1
    return x


def cover_metrics(x, graph: Graph):
    """(cover size, uncovered edge count, uncovered ratio) of a 0/1 labeling,
    evaluated before any repair step."""
    x = np.asarray(x, int)
    size = int(x.sum())
    if graph.n_edges == 0:
        return size, 0, 0.0
    i, j = graph.edge_list[:, 0], graph.edge_list[:, 1]
    uncov = int(np.sum((x[i] == 0) & (x[j] == 0)))
    return size, uncov, uncov / graph.n_edges


def brute_force_vc(graph: Graph):
    """Exact minimum vertex cover by increasing-size enumeration (n <= 20)."""
    if graph.n > 20:
        raise ParameterError("brute force limited to n <= 20")
    if graph.n_edges == 0:
        return 0, np.zeros(graph.n, dtype=int)
    i, j = graph.edge_list[:, 0], graph.edge_list[:, 1]
    for k in range(1, graph.n + 1):
        for comb in itertools.combinations(range(graph.n), k):
            x = np.zeros(graph.n, dtype=int)
            x[list(comb)] = 1
            if np.all((x[i] == 1) | (x[j] == 1)):
                return k, x
    return graph.n, np.ones(graph.n, dtype=int)


def relaxation_from_json(obj):
    graph = _graph_from_edges(obj["n"], [tuple(e) for e in obj["edges"]])
    if obj["problem"] == "maxcut":
        return MaxCutTarget(graph, obj.get("temperature", 0.5))
    if obj["problem"] == "vertex_cover":
        return VCTarget(graph, obj.get("penalty", 2.0), obj.get("temperature", 0.5))
    raise ParameterError(f"unknown relaxation problem {obj['problem']!r}")
