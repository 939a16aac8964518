"""Undirected weighted graphs, random generators, weights, noise and file I/O.

All randomness is driven by an explicit integer seed passed to
:func:`numpy.random.default_rng`, so every generator is a deterministic
function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import FormatError, ParameterError
from .polytope import Permutation


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph stored as a dense symmetric weight matrix.

    ``W[i, j] > 0`` is the weight of edge ``{i, j}``; zero means no edge.
    The diagonal is zero.  The array is made read-only on construction.
    """

    W: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        validate_adjacency(W)
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def p(self):
        return self.W.shape[0]

    @property
    def edge_count(self):
        return int(np.count_nonzero(np.triu(self.W, 1)))

    @property
    def support(self):
        """0/1 adjacency matrix of the same graph."""
        return (self.W != 0).astype(float)

    def degrees(self):
        return np.count_nonzero(self.W, axis=1)

    def edges(self):
        """Edge list ``[(i, j, w), ...]`` with ``i < j``, row-major order."""
        iu, ju = np.nonzero(np.triu(self.W, 1))
        return [(int(i), int(j), float(self.W[i, j])) for i, j in zip(iu, ju)]

    def is_unweighted(self):
        return bool(np.all((self.W == 0) | (self.W == 1)))

    @classmethod
    def empty(cls, p):
        return cls(np.zeros((p, p)))

    @classmethod
    def complete(cls, p):
        return cls(np.ones((p, p)) - np.eye(p))

    @classmethod
    def from_edges(cls, p, edges):
        W = np.zeros((p, p))
        for edge in edges:
            i, j = edge[0], edge[1]
            w = edge[2] if len(edge) > 2 else 1.0
            W[i, j] = W[j, i] = w
        return cls(W)

    def __eq__(self, other):
        return isinstance(other, Graph) and np.array_equal(self.W, other.W)

    def __hash__(self):
        return hash(self.W.tobytes())

    def __repr__(self):
        return f"Graph(p={self.p}, e={self.edge_count})"


def validate_adjacency(W):
    """Raise :class:`ParameterError` unless ``W`` is a valid undirected adjacency."""
    if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] == 0:
        raise ParameterError(f"adjacency must be a non-empty square matrix, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise ParameterError("adjacency has non-finite entries")
    if np.any(W < 0):
        raise ParameterError("adjacency has negative weights")
    if np.any(np.diag(W) != 0):
        raise ParameterError("adjacency has self-loops")
    if not np.array_equal(W, W.T):
        raise ParameterError("adjacency is not symmetric")


# -- weight models ---------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def __post_init__(self):
        if not self.value > 0:
            raise ParameterError("constant weight must be positive")

    def sample(self, rng, n):
        return np.full(n, float(self.value))

    def __str__(self):
        return f"constant:{self.value:g}"


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 < self.lo <= self.hi:
            raise ParameterError("uniform weights need 0 < lo <= hi")

    def sample(self, rng, n):
        return rng.uniform(self.lo, self.hi, size=n)

    def __str__(self):
        return f"uniform:{self.lo:g},{self.hi:g}"


@dataclass(frozen=True)
class Gaussian:
    """Normal weights; nonpositive draws are redrawn."""

    mean: float
    std: float

    def __post_init__(self):
        if self.std < 0:
            raise ParameterError("std must be nonnegative")
        if self.std == 0 and self.mean <= 0:
            raise ParameterError("degenerate gaussian with nonpositive mean")
        if self.mean + 8 * self.std <= 0:
            raise ParameterError("gaussian puts almost no mass on positive weights")

    def sample(self, rng, n):
        out = rng.normal(self.mean, self.std, size=n)
        bad = out <= 0
        while np.any(bad):
            out[bad] = rng.normal(self.mean, self.std, size=int(bad.sum()))
            bad = out <= 0
        return out

    def __str__(self):
        return f"gaussian:{self.mean:g},{self.std:g}"


WeightModel = Union[Constant, Uniform, Gaussian]

DEFAULT_WEIGHTS = Uniform(0.5, 1.5)


def parse_weight_model(text):
    """Parse ``constant[:v]``, ``uniform:lo,hi`` or ``gaussian:mean,std``."""
    name, _, args = text.strip().partition(":")
    name = name.lower()
    try:
        values = [float(a) for a in args.split(",")] if args else []
    except ValueError:
        raise ParameterError(f"bad weight model {text!r}") from None
    if name in ("constant", "unweighted") and len(values) <= 1:
        return Constant(*values)
    if name == "uniform" and len(values) == 2:
        return Uniform(*values)
    if name in ("gaussian", "normal") and len(values) == 2:
        return Gaussian(*values)
    raise ParameterError(f"bad weight model {text!r}; expected constant[:v], "
                         "uniform:lo,hi or gaussian:mean,std")


@dataclass(frozen=True)
class NoiseSpec:
    N: int
    weight_model: WeightModel = DEFAULT_WEIGHTS

    def __post_init__(self):
        if self.N < 0:
            raise ParameterError("noise edge count must be nonnegative")


# -- generators -----------------------------------------------------------

def _max_edges(p):
    return p * (p - 1) // 2


def _from_pair_indices(p, idx, weights=None):
    iu, ju = np.triu_indices(p, 1)
    W = np.zeros((p, p))
    w = 1.0 if weights is None else weights
    W[iu[idx], ju[idx]] = w
    W[ju[idx], iu[idx]] = w
    return Graph(W)


def gen_erdos_renyi(p, m, seed):
    """Uniform random graph with exactly ``m`` edges (the G(n, m) model)."""
    if p < 1:
        raise ParameterError("p must be positive")
    if not 0 <= m <= _max_edges(p):
        raise ParameterError(f"edge count {m} outside [0, {_max_edges(p)}] for p={p}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(_max_edges(p), size=m, replace=False))
    return _from_pair_indices(p, idx)


def gen_barabasi_albert(p, m_attach, seed):
    """Preferential attachment grown from a clique on ``m_attach + 1`` nodes."""
    if not 1 <= m_attach < p:
        raise ParameterError(f"m_attach must satisfy 1 <= m_attach < p, got {m_attach} (p={p})")
    rng = np.random.default_rng(seed)
    W = np.zeros((p, p))
    k = m_attach + 1
    W[:k, :k] = 1.0 - np.eye(k)
    deg = W.sum(axis=1)
    for v in range(k, p):
        prob = deg[:v] / deg[:v].sum()
        targets = rng.choice(v, size=m_attach, replace=False, p=prob)
        W[v, targets] = W[targets, v] = 1.0
        deg[targets] += 1
        deg[v] = m_attach
    return Graph(W)


def geometric_degree_pmf(p, mu):
    """Probabilities of degrees ``1..p-1`` under the truncated geometric law."""
    t = np.arange(1, p)
    w = np.exp(-mu * (t - 1))
    return t, w / w.sum()


def gen_bter_geometric(p, mu, seed, block_density=0.7):
    """BTER-style graph whose degrees follow a truncated geometric law.

    Target degrees are drawn with ``Prob(degree = t)`` proportional to
    ``exp(-mu * t)`` on ``1..p-1``.  Phase one groups nodes of similar
    target degree ``d >= 2`` into blocks of ``d + 1`` nodes wired as dense
    Erdos-Renyi blocks with edge probability ``block_density``.  Phase two
    spends the remaining (excess) degree with a Chung-Lu pass.
    """
    if not mu > 0:
        raise ParameterError("mu must be positive")
    if p < 2:
        raise ParameterError("p must be at least 2")
    if not 0 <= block_density <= 1:
        raise ParameterError("block_density must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    t, pmf = geometric_degree_pmf(p, mu)
    target = rng.choice(t, size=p, p=pmf)
    W = np.zeros((p, p))

    order = np.argsort(target, kind="stable")
    order = order[target[order] >= 2]
    pos = 0
    while pos < order.size:
        d = int(target[order[pos]])
        block = order[pos:pos + d + 1]
        pos += d + 1
        if block.size < 2:
            break
        bi, bj = np.triu_indices(block.size, 1)
        keep = rng.random(bi.size) < block_density
        u, v = block[bi[keep]], block[bj[keep]]
        W[u, v] = W[v, u] = 1.0

    excess = np.maximum(target - W.sum(axis=1), 0.0)
    wanted = int(round(excess.sum() / 2))
    if wanted > 0:
        prob = excess / excess.sum()
        placed = 0
        attempts = 0
        budget = 20 * wanted + 100
        while placed < wanted and attempts < budget:
            batch = 2 * (wanted - placed) + 8
            ends = rng.choice(p, size=(batch, 2), p=prob)
            for a, b in ends:
                attempts += 1
                if a != b and W[a, b] == 0:
                    W[a, b] = W[b, a] = 1.0
                    placed += 1
                    if placed == wanted:
                        break
    return Graph(W)


# -- weights, noise, relabeling -----------------------------------------------

def assign_weights(g, model, seed):
    """Draw an independent weight from ``model`` for every existing edge."""
    rng = np.random.default_rng(seed)
    iu, ju = np.nonzero(np.triu(g.W, 1))
    w = model.sample(rng, iu.size)
    W = np.zeros_like(g.W)
    W[iu, ju] = w
    W[ju, iu] = w
    return Graph(W)


def add_noise(g, spec, seed):
    """Add ``spec.N`` spurious edges uniformly among absent pairs.

    Existing entries are left untouched; new weights come from
    ``spec.weight_model``.
    """
    iu, ju = np.triu_indices(g.p, 1)
    absent = np.flatnonzero(g.W[iu, ju] == 0)
    if spec.N > absent.size:
        raise ParameterError(f"cannot add {spec.N} noise edges: only {absent.size} absent pairs")
    if spec.N == 0:
        return g
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(absent, size=spec.N, replace=False))
    w = spec.weight_model.sample(rng, spec.N)
    W = g.W.copy()
    W[iu[pick], ju[pick]] = w
    W[ju[pick], iu[pick]] = w
    return Graph(W)


def permute_graph(g, perm):
    """Relabel ``g`` as ``P^T W P`` for the matrix view ``P`` of ``perm``."""
    if perm.size != g.p:
        raise ParameterError(f"permutation of size {perm.size} applied to graph with p={g.p}")
    inv = perm.inverse().sigma
    return Graph(g.W[np.ix_(inv, inv)])


# -- file I/O -------------------------------------------------------------------

def _fmt(w):
    return format(float(w), ".17g")


def write_graph(g, path):
    """Write ``g`` as a header ``p e`` followed by one ``i j w`` line per edge (1-based, i < j)."""
    edges = g.edges()
    with open(path, "w") as fh:
        fh.write(f"{g.p} {len(edges)}\n")
        for i, j, w in edges:
            fh.write(f"{i + 1} {j + 1} {_fmt(w)}\n")


def _data_lines(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def _read_header(lines, path):
    try:
        lineno, fields = next(lines)
    except StopIteration:
        raise FormatError("empty file", path) from None
    if len(fields) != 2:
        raise FormatError("header must be 'p e'", path, lineno)
    try:
        p, e = int(fields[0]), int(fields[1])
    except ValueError:
        raise FormatError("header must hold two integers 'p e'", path, lineno) from None
    if p < 1 or e < 0:
        raise FormatError(f"invalid header values p={p} e={e}", path, lineno)
    return p, e


def _parse_triplet(fields, p, path, lineno):
    if len(fields) != 3:
        raise FormatError("expected 'i j w'", path, lineno)
    try:
        i, j, w = int(fields[0]), int(fields[1]), float(fields[2])
    except ValueError:
        raise FormatError("expected integers i j and a real weight w", path, lineno) from None
    if not (1 <= i <= p and 1 <= j <= p):
        raise FormatError(f"index out of range 1..{p}", path, lineno)
    if not math.isfinite(w):
        raise FormatError("non-finite weight", path, lineno)
    return i - 1, j - 1, w


def read_graph(path):
    """Read a graph written by :func:`write_graph`.

    Each undirected edge may be listed once (either orientation) or twice
    with identical weights.
    """
    lines = _data_lines(path)
    p, e = _read_header(lines, path)
    W = np.zeros((p, p))
    for lineno, fields in lines:
        i, j, w = _parse_triplet(fields, p, path, lineno)
        if i == j:
            raise FormatError(f"self-loop on node {i + 1}", path, lineno)
        if w <= 0:
            raise FormatError("edge weights must be positive", path, lineno)
        if W[i, j] != 0 and W[i, j] != w:
            raise FormatError(f"asymmetric or conflicting entry for edge ({i + 1}, {j + 1})",
                              path, lineno)
        W[i, j] = W[j, i] = w
    count = int(np.count_nonzero(np.triu(W, 1)))
    if count != e:
        raise FormatError(f"header announces {e} edges but {count} were read", path)
    return Graph(W)


def write_matrix(M, path):
    """Write a square matrix as ``p e`` plus one ``i j w`` line per nonzero entry."""
    M = np.asarray(M, dtype=float)
    ii, jj = np.nonzero(M)
    with open(path, "w") as fh:
        fh.write(f"{M.shape[0]} {ii.size}\n")
        for i, j in zip(ii, jj):
            fh.write(f"{i + 1} {j + 1} {_fmt(M[i, j])}\n")


def read_matrix(path):
    """Read a general square matrix in coordinate format (no symmetry implied)."""
    lines = _data_lines(path)
    p, e = _read_header(lines, path)
    M = np.zeros((p, p))
    seen = set()
    for lineno, fields in lines:
        i, j, w = _parse_triplet(fields, p, path, lineno)
        if (i, j) in seen:
            raise FormatError(f"duplicate entry ({i + 1}, {j + 1})", path, lineno)
        seen.add((i, j))
        M[i, j] = w
    if len(seen) != e:
        raise FormatError(f"header announces {e} entries but {len(seen)} were read", path)
    return M


def write_permutation(perm, path):
    with open(path, "w") as fh:
        fh.write(" ".join(str(s) for s in perm.to_one_based()) + "\n")


def read_permutation(path):
    """Read a one-line, space-separated list of 1-based targets."""
    rows = list(_data_lines(path))
    if len(rows) != 1:
        raise FormatError("permutation file must contain exactly one line", path)
    lineno, fields = rows[0]
    try:
        values = [int(f) for f in fields]
    except ValueError:
        raise FormatError("permutation entries must be integers", path, lineno) from None
    try:
        return Permutation.from_one_based(values)
    except ParameterError as exc:
        raise FormatError(f"not a permutation of 1..{len(values)}: {exc}", path, lineno) from None


def write_precision(Theta, path):
    """Write a symmetric matrix as ``p e``, the ``e`` nonzero entries above the
    diagonal as signed ``i j w`` lines, then all ``p`` diagonal ``i i w`` lines."""
    T = np.asarray(Theta, dtype=float)
    iu, ju = np.nonzero(np.triu(T, 1))
    with open(path, "w") as fh:
        fh.write(f"{T.shape[0]} {iu.size}\n")
        for i, j in zip(iu, ju):
            fh.write(f"{i + 1} {j + 1} {_fmt(T[i, j])}\n")
        for i in range(T.shape[0]):
            fh.write(f"{i + 1} {i + 1} {_fmt(T[i, i])}\n")


def read_precision(path):
    """Inverse of :func:`write_precision`; the lower triangle is mirrored."""
    lines = _data_lines(path)
    p, e = _read_header(lines, path)
    T = np.zeros((p, p))
    seen = set()
    off = 0
    for lineno, fields in lines:
        i, j, w = _parse_triplet(fields, p, path, lineno)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise FormatError(f"duplicate entry ({i + 1}, {j + 1})", path, lineno)
        seen.add(key)
        off += i != j
        T[i, j] = T[j, i] = w
    if off != e:
        raise FormatError(f"header announces {e} off-diagonal entries but {off} were read", path)
    return T
