"""Deterministic time-varying consensus schedules and their mixing bounds.

A schedule is a periodic sequence W(1), W(2), ... of symmetric stochastic
matrices.  Validity means: every W(k) is symmetric, stochastic and
nonnegative with strictly positive diagonal, and the union of the support
graphs over every window of ``window`` consecutive steps is connected.
``min_weight`` is measured from the matrices as the smallest positive entry
across one period.

The backward product Phi(k, j) = W(k-1) ... W(j) governs how innovations
entered at time j spread by time k.  Its disagreement part (Phi minus the
averaging projector) contracts geometrically; ``contraction_bound`` gives
the proven envelope amplitude * ratio**(k-j) and ``check_geometric_decay``
measures actual products against it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BoundViolated,
    InvalidWeights,
    NoConnectedWindow,
    ParameterError,
    ShapeError,
)

__all__ = [
    "GraphSnapshot",
    "ScheduleSpec",
    "WeightSchedule",
    "ContractionBound",
    "ValidationReport",
    "DecayReport",
    "metropolis_weights",
    "build_schedule",
    "validate_assumption",
    "forward_product",
    "disagreement_product",
    "contraction_bound",
    "check_geometric_decay",
]

STOCHASTIC_ATOL = 1e-12
PRODUCT_AGREE_ATOL = 1e-12
TOPOLOGIES = ("static", "alternating-links", "random-subgraph")
WEIGHT_RULES = ("metropolis", "explicit")


@dataclass(frozen=True)
class GraphSnapshot:
    """Undirected simple graph on nodes labeled 1..n_nodes."""

    n_nodes: int
    edges: frozenset

    def __init__(self, n_nodes: int, edges):
        if not isinstance(n_nodes, (int, np.integer)) or n_nodes < 1:
            raise ParameterError(f"n_nodes must be a positive integer, got {n_nodes!r}")
        norm = set()
        for e in edges:
            pair = tuple(int(x) for x in e)
            if len(pair) != 2:
                raise ParameterError(f"edge {e!r} is not a pair")
            i, j = min(pair), max(pair)
            if i == j:
                raise ParameterError(f"self-loop on node {i}")
            if not (1 <= i and j <= n_nodes):
                raise ParameterError(f"edge {e!r} outside nodes 1..{n_nodes}")
            norm.add((i, j))
        object.__setattr__(self, "n_nodes", int(n_nodes))
        object.__setattr__(self, "edges", frozenset(norm))

    def degrees(self) -> np.ndarray:
        d = np.zeros(self.n_nodes, dtype=int)
        for i, j in self.edges:
            d[i - 1] += 1
            d[j - 1] += 1
        return d

    def is_connected(self) -> bool:
        return _connected(self.n_nodes, self.edges)


def _connected(n: int, edges) -> bool:
    """Breadth-first reachability from node 1; a single node is connected."""
    if n == 1:
        return True
    adj: list[list[int]] = [[] for _ in range(n + 1)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {1}
    queue = [1]
    while queue:
        u = queue.pop()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == n


def metropolis_weights(g: GraphSnapshot) -> np.ndarray:
    """W_ij = 1/(1 + max(d_i, d_j)) on edges, diagonal takes the remainder."""
    n = g.n_nodes
    d = g.degrees()
    w = np.zeros((n, n))
    for i, j in g.edges:
        w[i - 1, j - 1] = w[j - 1, i - 1] = 1.0 / (1.0 + max(d[i - 1], d[j - 1]))
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return w


@dataclass(frozen=True)
class ScheduleSpec:
    """Recipe for a periodic schedule.

    topology selects how per-step support graphs are produced:
      static             one graph (``edges``) repeated, period 1
      alternating-links  ``link_cycle`` lists the edge set of each step
      random-subgraph    seeded per-step subsets of ``edges``, each edge kept
                         with probability ``keep_prob``, frozen at build
    weight_rule "metropolis" derives W(k) from each step's graph;
    "explicit" takes ``matrices`` verbatim (topology is then ignored).
    """

    n_nodes: int
    topology: str = "static"
    edges: tuple = ()
    link_cycle: tuple | None = None
    period: int | None = None
    seed: int | None = None
    keep_prob: float = 0.5
    weight_rule: str = "metropolis"
    matrices: tuple | None = None


@dataclass(frozen=True)
class WeightSchedule:
    """Validated periodic schedule; W(k) = matrices[(k-1) % period]."""

    n_nodes: int
    period: int
    matrices: np.ndarray  # (period, n, n), read-only
    min_weight: float
    window: int

    def weight_at(self, k: int) -> np.ndarray:
        if k < 1:
            raise IndexError(f"time index must be >= 1, got {k}")
        return self.matrices[(k - 1) % self.period]

    def edges_at(self, k: int) -> frozenset:
        return _support_edges(self.weight_at(k))


def _support_edges(w: np.ndarray) -> frozenset:
    n = w.shape[0]
    return frozenset(
        (i + 1, j + 1) for i in range(n) for j in range(i + 1, n) if w[i, j] > 0.0
    )


def _step_graphs(spec: ScheduleSpec) -> list[GraphSnapshot]:
    n = spec.n_nodes
    if spec.topology == "static":
        return [GraphSnapshot(n, spec.edges)]
    if spec.topology == "alternating-links":
        if not spec.link_cycle:
            raise ParameterError("alternating-links needs a nonempty link_cycle")
        return [GraphSnapshot(n, step) for step in spec.link_cycle]
    if spec.topology == "random-subgraph":
        if spec.period is None or spec.period < 1:
            raise ParameterError("random-subgraph needs period >= 1")
        if spec.seed is None:
            raise ParameterError("random-subgraph needs a seed")
        if not 0.0 <= spec.keep_prob <= 1.0:
            raise ParameterError(f"keep_prob must be in [0, 1], got {spec.keep_prob}")
        base = sorted(GraphSnapshot(n, spec.edges).edges)
        rng = np.random.default_rng(spec.seed)
        graphs = []
        for _ in range(spec.period):
            keep = rng.random(len(base)) < spec.keep_prob
            graphs.append(GraphSnapshot(n, [e for e, m in zip(base, keep) if m]))
        return graphs
    raise ParameterError(f"unknown topology {spec.topology!r}")


def build_schedule(spec: ScheduleSpec) -> WeightSchedule:
    """Construct, validate and freeze the periodic matrix sequence.

    Raises InvalidWeights when a step matrix is not symmetric stochastic
    nonnegative with positive diagonal, and NoConnectedWindow when no
    window length up to the period has connected union support.
    """
    if spec.weight_rule not in WEIGHT_RULES:
        raise ParameterError(f"unknown weight_rule {spec.weight_rule!r}")
    if spec.weight_rule == "explicit":
        if not spec.matrices:
            raise ParameterError("explicit weight_rule needs matrices")
        mats = [np.array(m, dtype=float) for m in spec.matrices]
        for k, w in enumerate(mats, start=1):
            if w.shape != (spec.n_nodes, spec.n_nodes):
                raise ShapeError(f"matrix {k} has shape {w.shape}")
    else:
        mats = [metropolis_weights(g) for g in _step_graphs(spec)]

    for k, w in enumerate(mats, start=1):
        if not np.isfinite(w).all():
            raise InvalidWeights(f"step {k}: non-finite entries")
        if float(np.abs(w - w.T).max()) > STOCHASTIC_ATOL:
            raise InvalidWeights(f"step {k}: matrix is not symmetric")
        if float(np.abs(w.sum(axis=1) - 1.0).max()) > STOCHASTIC_ATOL:
            raise InvalidWeights(f"step {k}: rows do not sum to 1")
        if float(w.min()) < -STOCHASTIC_ATOL:
            raise InvalidWeights(f"step {k}: negative entry {w.min():.3e}")
        if float(np.diag(w).min()) <= 0.0:
            raise InvalidWeights(f"step {k}: zero diagonal entry")

    stacked = np.array(mats)
    positive = stacked[stacked > 0.0]
    min_weight = float(positive.min())
    window = _find_window(stacked)
    stacked.flags.writeable = False
    return WeightSchedule(
        n_nodes=spec.n_nodes,
        period=len(mats),
        matrices=stacked,
        min_weight=min_weight,
        window=window,
    )


def _find_window(mats: np.ndarray) -> int:
    """Smallest B <= period with all length-B union supports connected.

    A window of length >= period covers every residue, so searching up to
    the period is exhaustive.
    """
    p, n = mats.shape[0], mats.shape[1]
    step_edges = [_support_edges(mats[l]) for l in range(p)]
    for b in range(1, p + 1):
        ok = True
        for start in range(p):
            union = set()
            for l in range(start, start + b):
                union |= step_edges[l % p]
            if not _connected(n, union):
                ok = False
                break
        if ok:
            return b
    raise NoConnectedWindow(
        f"union support over a full period is disconnected (period {p})"
    )


# ── validation report ─────────────────────────────────────────────────────


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    failures: tuple = ()

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "failures": list(self.failures)}


@dataclass(frozen=True)
class ValidationReport:
    items: tuple

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    def as_dict(self) -> dict:
        return {"passed": self.passed, "checks": [item.as_dict() for item in self.items]}


def validate_assumption(s: WeightSchedule) -> ValidationReport:
    """Check the stored matrices against the schedule's own claims.

    Three items: symmetric-stochastic structure, the positive-weight floor
    (diagonal and supported off-diagonal entries >= min_weight), and
    connectivity of every union window of the claimed length.
    """
    structural = []
    for k in range(1, s.period + 1):
        w = s.weight_at(k)
        sym = float(np.abs(w - w.T).max())
        rows = float(np.abs(w.sum(axis=1) - 1.0).max())
        neg = float(w.min())
        if sym > STOCHASTIC_ATOL:
            structural.append({"k": k, "issue": "asymmetric", "value": sym})
        if rows > STOCHASTIC_ATOL:
            structural.append({"k": k, "issue": "row-sum", "value": rows})
        if neg < -STOCHASTIC_ATOL:
            structural.append({"k": k, "issue": "negative-entry", "value": neg})

    floor = []
    if not 0.0 < s.min_weight <= 1.0:
        floor.append({"issue": "min-weight-range", "value": s.min_weight})
    tol = STOCHASTIC_ATOL
    for k in range(1, s.period + 1):
        w = s.weight_at(k)
        dmin = float(np.diag(w).min())
        if dmin < s.min_weight - tol:
            floor.append({"k": k, "issue": "diagonal-below-floor", "value": dmin})
        off = w[~np.eye(s.n_nodes, dtype=bool)]
        small = off[(off > 0.0) & (off < s.min_weight - tol)]
        if small.size:
            floor.append({"k": k, "issue": "edge-below-floor", "value": float(small.min())})

    connect = []
    for start in range(1, s.period + 1):
        union = set()
        for l in range(start, start + s.window):
            union |= s.edges_at(l)
        if not _connected(s.n_nodes, union):
            connect.append({"start_k": start, "window": s.window, "issue": "disconnected-union"})

    return ValidationReport(
        items=(
            CheckResult("symmetric-stochastic", not structural, tuple(structural)),
            CheckResult("weight-floor", not floor, tuple(floor)),
            CheckResult("window-connectivity", not connect, tuple(connect)),
        )
    )


# ── products and contraction ──────────────────────────────────────────────


def forward_product(s: WeightSchedule, k: int, j: int) -> np.ndarray:
    """Phi(k, j) = W(k-1) @ ... @ W(j) for k > j >= 1."""
    if not (k > j >= 1):
        raise IndexError(f"need k > j >= 1, got k={k}, j={j}")
    out = np.eye(s.n_nodes)
    for l in range(j, k):
        out = s.weight_at(l) @ out
    return out


def disagreement_product(s: WeightSchedule, k: int, j: int) -> np.ndarray:
    """Phi(k, j) minus the averaging projector, cross-checked two ways.

    Computed as the ordered product of the (W(l) - J) factors, which keeps
    precision once entries are tiny, and verified against Phi(k, j) - J to
    1e-12 absolute; doubly stochastic factors make the two identical in
    exact arithmetic.
    """
    if not (k > j >= 1):
        raise IndexError(f"need k > j >= 1, got k={k}, j={j}")
    jmat = np.full((s.n_nodes, s.n_nodes), 1.0 / s.n_nodes)
    tilde = np.eye(s.n_nodes)
    for l in range(j, k):
        tilde = (s.weight_at(l) - jmat) @ tilde
    direct = forward_product(s, k, j) - jmat
    gap = float(np.abs(tilde - direct).max())
    if gap > PRODUCT_AGREE_ATOL:
        raise RuntimeError(
            f"disagreement product mismatch {gap:.3e} at (k={k}, j={j})"
        )
    return tilde


@dataclass(frozen=True)
class ContractionBound:
    """Envelope amplitude * ratio**(k-j) for disagreement-product entries."""

    amplitude: float
    ratio: float


def contraction_bound(n: int, min_weight: float, window: int) -> ContractionBound:
    """Geometric envelope constants from network size, weight floor, window."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n!r}")
    if not 0.0 < min_weight <= 1.0:
        raise ParameterError(f"min_weight must be in (0, 1], got {min_weight}")
    if not isinstance(window, (int, np.integer)) or window < 1:
        raise ParameterError(f"window must be a positive integer, got {window!r}")
    base = 1.0 - min_weight / (4.0 * n * n)
    return ContractionBound(amplitude=base**-2, ratio=base ** (1.0 / window))


@dataclass(frozen=True)
class DecayReport:
    """Measured disagreement decay versus the proven envelope."""

    max_gap: int
    amplitude: float
    ratio: float
    worst_ratio: float
    worst_witness: dict
    measured_rate: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "max_gap": self.max_gap,
            "amplitude": self.amplitude,
            "ratio": self.ratio,
            "worst_ratio": self.worst_ratio,
            "worst_witness": dict(self.worst_witness),
            "measured_rate": self.measured_rate,
            "passed": self.passed,
        }


def check_geometric_decay(s: WeightSchedule, max_gap: int = 200) -> DecayReport:
    """Measure max |disagreement entry| over all gaps up to max_gap.

    Start times j range over one period; products accumulate incrementally.
    Raises BoundViolated with a witness if any entry exceeds the envelope.
    The measured per-gap decay rate (slope of log max-entry) is reported
    alongside; it is infinite when products vanish outright.
    """
    if max_gap < 1:
        raise ParameterError(f"max_gap must be >= 1, got {max_gap}")
    bound = contraction_bound(s.n_nodes, s.min_weight, s.window)
    jmat = np.full((s.n_nodes, s.n_nodes), 1.0 / s.n_nodes)
    tildes = [s.weight_at(j) - jmat for j in range(1, s.period + 1)]
    gap_max = np.zeros(max_gap)
    worst = (0.0, {})
    for j0 in range(1, s.period + 1):
        prod = np.eye(s.n_nodes)
        for gap in range(1, max_gap + 1):
            prod = tildes[(j0 + gap - 2) % s.period] @ prod
            value = float(np.abs(prod).max())
            envelope = bound.amplitude * bound.ratio**gap
            if value > envelope * (1.0 + 1e-9):
                raise BoundViolated(
                    f"entry {value:.6e} exceeds envelope {envelope:.6e}",
                    witness={"j": j0, "k": j0 + gap, "gap": gap, "value": value, "bound": envelope},
                )
            gap_max[gap - 1] = max(gap_max[gap - 1], value)
            if envelope > 0 and value / envelope > worst[0]:
                worst = (value / envelope, {"j": j0, "k": j0 + gap, "gap": gap, "value": value, "bound": envelope})

    gaps = np.arange(1, max_gap + 1)
    mask = gap_max > 1e-280
    if mask.sum() >= 2:
        slope = np.polyfit(gaps[mask], np.log(gap_max[mask]), 1)[0]
        measured_rate = -float(slope)
    else:
        measured_rate = float("inf")
    return DecayReport(
        max_gap=max_gap,
        amplitude=bound.amplitude,
        ratio=bound.ratio,
        worst_ratio=worst[0],
        worst_witness=worst[1],
        measured_rate=measured_rate,
        passed=True,
    )
