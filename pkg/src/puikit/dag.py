"""Causal DAG over interventions, modifiable risk factors, and the outcome.

Edges carry linear per-unit effects: intervention -> mediator in mediator
units, mediator -> mediator in target units per source unit, and
mediator/intervention -> outcome on the log-hazard scale. Unknown edge
effects can be resolved from known total intervention effects under the
consistency-of-indirect-effects assumption, which makes every path
contribution linear in its single unknown edge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InconsistentSystemError,
    InvalidSpecError,
    UnderdeterminedError,
    UnresolvedEffectError,
)

NODE_KINDS = ("intervention", "mediator", "outcome")


@dataclass(frozen=True)
class Node:
    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise InvalidSpecError(f"unknown node kind {self.kind!r}")


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    effect: float | None = None  # None marks an unknown effect


@dataclass(frozen=True)
class KnownTotal:
    intervention: str
    total: float


@dataclass(frozen=True)
class InterventionSpec:
    """A hypothetical intervention: direct mediator shifts plus any direct
    outcome effect on the log scale."""

    name: str
    deltas: dict = field(default_factory=dict)
    direct_outcome_effect: float = 0.0


class CausalDag:
    def __init__(self, nodes, edges, knowns=()):
        self.nodes = {n.name: n for n in nodes}
        if len(self.nodes) != len(nodes):
            raise InvalidSpecError("duplicate node names")
        outcomes = [n for n in nodes if n.kind == "outcome"]
        if len(outcomes) != 1:
            raise InvalidSpecError(f"exactly one outcome node required, got {len(outcomes)}")
        self.outcome = outcomes[0].name
        for e in edges:
            if e.src not in self.nodes or e.dst not in self.nodes:
                raise InvalidSpecError(f"edge {e.src}->{e.dst} references unknown node")
            if e.effect is not None and not np.isfinite(e.effect):
                raise InvalidSpecError(f"edge {e.src}->{e.dst} effect not finite")
        self.edges = list(edges)
        self.knowns = list(knowns)
        self._children = {n: [] for n in self.nodes}
        for e in self.edges:
            self._children[e.src].append(e)
        self.topo_order = self._toposort()

    def _toposort(self):
        indeg = {n: 0 for n in self.nodes}
        for e in self.edges:
            indeg[e.dst] += 1
        queue = [n for n, d in indeg.items() if d == 0]
        order = []
        while queue:
            n = queue.pop()
            order.append(n)
            for e in self._children[n]:
                indeg[e.dst] -= 1
                if indeg[e.dst] == 0:
                    queue.append(e.dst)
        if len(order) != len(self.nodes):
            raise InvalidSpecError("graph contains a cycle")
        return order

    def mediators(self):
        return [n for n in self.topo_order if self.nodes[n].kind == "mediator"]

    def edge(self, src, dst):
        for e in self.edges:
            if e.src == src and e.dst == dst:
                return e
        return None

    def paths_to_outcome(self, start):
        """All directed paths from `start` to the outcome, as edge lists."""
        paths = []

        def walk(node, acc):
            if node == self.outcome:
                paths.append(list(acc))
                return
            for e in self._children[node]:
                walk(e.dst, acc + [e])

        walk(start, [])
        return paths

    def with_effects(self, assignment: dict):
        """Copy of the DAG with unknown edges filled from {(src, dst): value}."""
        new_edges = [
            Edge(e.src, e.dst, assignment.get((e.src, e.dst), e.effect)) for e in self.edges
        ]
        return CausalDag(list(self.nodes.values()), new_edges, self.knowns)

    # -- serialization ----------------------------------------------------
    def to_dict(self):
        return {
            "nodes": [{"name": n.name, "kind": n.kind} for n in self.nodes.values()],
            "edges": [{"from": e.src, "to": e.dst, "effect": e.effect} for e in self.edges],
            "knowns": [{"intervention": k.intervention, "total": k.total} for k in self.knowns],
        }

    @classmethod
    def from_dict(cls, data):
        nodes = [Node(d["name"], d["kind"]) for d in data["nodes"]]
        edges = [Edge(d["from"], d["to"], d.get("effect")) for d in data["edges"]]
        knowns = [KnownTotal(d["intervention"], d["total"]) for d in data.get("knowns", [])]
        return cls(nodes, edges, knowns)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def total_effect(dag: CausalDag, intervention: str) -> float:
    """Total log-scale effect: sum over directed paths of edge products."""
    if intervention not in dag.nodes:
        raise InvalidSpecError(f"unknown intervention {intervention!r}")
    total = 0.0
    for path in dag.paths_to_outcome(intervention):
        prod = 1.0
        for e in path:
            if e.effect is None:
                raise UnresolvedEffectError(f"edge {e.src}->{e.dst} has unknown effect")
            prod *= e.effect
        total += prod
    return total


def resolve_direct_effects(dag: CausalDag, knowns=None, tolerance: float = 1e-10) -> CausalDag:
    """Solve for unknown edge effects from known total intervention effects.

    Each known total is equated with its path-sum expression; with at most
    one unknown edge per path the system is linear and solved by QR-based
    least squares, with residual and rank checks.
    """
    knowns = list(dag.knowns if knowns is None else knowns)
    unknowns = [(e.src, e.dst) for e in dag.edges if e.effect is None]
    if not unknowns:
        return dag
    index = {u: j for j, u in enumerate(unknowns)}
    A = np.zeros((len(knowns), len(unknowns)))
    b = np.zeros(len(knowns))
    for i, known in enumerate(knowns):
        b[i] = known.total
        for path in dag.paths_to_outcome(known.intervention):
            path_unknowns = [e for e in path if e.effect is None]
            coeff = np.prod([e.effect for e in path if e.effect is not None] or [1.0])
            if len(path_unknowns) == 0:
                b[i] -= coeff
            elif len(path_unknowns) == 1:
                e = path_unknowns[0]
                A[i, index[(e.src, e.dst)]] += coeff
            else:
                raise UnresolvedEffectError(
                    f"path via {known.intervention} has {len(path_unknowns)} unknown edges; "
                    "only one unknown per path is solvable"
                )
    rank = np.linalg.matrix_rank(A)
    if rank < len(unknowns):
        _, _, vt = np.linalg.svd(A)
        null = vt[rank:]
        free = [u for j, u in enumerate(unknowns) if np.abs(null[:, j]).max() > 1e-8]
        raise UnderdeterminedError(
            f"{len(knowns)} equation(s) cannot determine {len(unknowns)} unknown edge(s)",
            free_unknowns=free,
        )
    solution, *_ = np.linalg.lstsq(A, b, rcond=None)
    residuals = A @ solution - b
    if np.abs(residuals).max() > tolerance:
        raise InconsistentSystemError(
            f"known totals are mutually inconsistent (max residual {np.abs(residuals).max():.3g})",
            residuals=residuals.tolist(),
        )
    return dag.with_effects(dict(zip(unknowns, solution.tolist())))


def knock_on(dag: CausalDag, spec: InterventionSpec) -> dict:
    """Total mediator shifts after propagating through mediator edges."""
    mediators = dag.mediators()
    for m in spec.deltas:
        if m not in mediators:
            raise InvalidSpecError(f"{m!r} is not a mediator in the DAG")
    totals = {m: float(spec.deltas.get(m, 0.0)) for m in mediators}
    for src in mediators:  # topological order
        for e in dag._children[src]:
            if e.dst in totals:
                if e.effect is None:
                    raise UnresolvedEffectError(f"edge {e.src}->{e.dst} has unknown effect")
                totals[e.dst] += totals[src] * e.effect
    return totals


def intervention_log_effect(
    dag: CausalDag,
    spec: InterventionSpec,
    baseline: dict | None = None,
    targets: dict | None = None,
) -> float:
    """Log-scale outcome effect of an intervention via its mediator shifts.

    When `baseline` and `targets` are supplied, each mediator contribution
    is the change in max(0, value - target), so shifts below target earn
    no credit (the clipping used by the modifiable-risk-factor variants).
    """
    deltas = knock_on(dag, spec)
    total = float(spec.direct_outcome_effect)
    for m, delta in deltas.items():
        e = dag.edge(m, dag.outcome)
        if e is None:
            continue
        if e.effect is None:
            raise UnresolvedEffectError(f"edge {m}->{dag.outcome} has unknown effect")
        if baseline is not None and targets is not None and m in targets:
            before = max(0.0, baseline[m] - targets[m])
            after = max(0.0, baseline[m] + delta - targets[m])
            total += (after - before) * e.effect
        else:
            total += delta * e.effect
    return total


def default_cvd_dag(constants=None) -> CausalDag:
    """The default three-mediator cardiovascular DAG.

    BMI has knock-on effects on SBP and non-HDL cholesterol; all three
    mediators act directly on the outcome with the toolkit's default
    per-unit log-hazard effects.
    """
    from .timeline import EffectConstants

    constants = constants or EffectConstants()
    nodes = [
        Node("bmi", "mediator"),
        Node("sbp", "mediator"),
        Node("nonhdl", "mediator"),
        Node("cvd", "outcome"),
    ]
    edges = [
        Edge("bmi", "sbp", 0.7),
        Edge("bmi", "nonhdl", 0.1044),
        Edge("sbp", "cvd", constants.b_sbp),
        Edge("bmi", "cvd", constants.b_bmi),
        Edge("nonhdl", "cvd", constants.b_nonhdl),
    ]
    return CausalDag(nodes, edges)
