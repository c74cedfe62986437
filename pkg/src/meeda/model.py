"""Services, tasks, QoS vectors and QoS aggregation over expressions and DAGs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence as Seq, Union

START = -1
END = -2


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class QosVector:
    t: float = 0.0
    ct: float = 0.0
    r: float = 1.0
    a: float = 1.0

    def __post_init__(self):
        for name in ("t", "ct", "r", "a"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ModelError(f"QoS {name} must be a finite number, got {v!r}")
        if self.t < 0 or self.ct < 0:
            raise ModelError(f"response time and cost must be >= 0 (t={self.t}, ct={self.ct})")
        if not (0 < self.r <= 1 and 0 < self.a <= 1):
            raise ModelError(f"reliability and availability must lie in (0, 1] (r={self.r}, a={self.a})")

    def as_dict(self) -> dict[str, float]:
        return {"t": self.t, "ct": self.ct, "r": self.r, "a": self.a}


NEUTRAL_QOS = QosVector()


@dataclass(frozen=True)
class Service:
    id: int
    inputs: frozenset[str]
    outputs: frozenset[str]
    qos: QosVector = NEUTRAL_QOS
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "inputs", frozenset(self.inputs))
        object.__setattr__(self, "outputs", frozenset(self.outputs))


@dataclass(frozen=True)
class CompositionTask:
    inputs: frozenset[str]
    outputs: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "inputs", frozenset(self.inputs))
        object.__setattr__(self, "outputs", frozenset(self.outputs))
        if not self.inputs or not self.outputs:
            raise ModelError("a composition task needs non-empty inputs and outputs")

    def start(self) -> Service:
        return Service(START, frozenset(), self.inputs, NEUTRAL_QOS, "Start")

    def end(self) -> Service:
        return Service(END, self.outputs, frozenset(), NEUTRAL_QOS, "End")


# -- composite service expressions ------------------------------------------


@dataclass(frozen=True)
class Sequence:
    children: tuple["Expr", ...]

    def __init__(self, *children: "Expr"):
        object.__setattr__(self, "children", tuple(children))


@dataclass(frozen=True)
class Parallel:
    children: tuple["Expr", ...]

    def __init__(self, *children: "Expr"):
        object.__setattr__(self, "children", tuple(children))


@dataclass(frozen=True)
class Choice:
    children: tuple["Expr", ...]
    probabilities: tuple[float, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        object.__setattr__(self, "probabilities", tuple(self.probabilities))


@dataclass(frozen=True)
class Iterate:
    child: "Expr"
    loops: float


Expr = Union[int, Sequence, Parallel, Choice, Iterate]


def aggregate_expression(expr: Expr, qos_of: Mapping[int, QosVector] | Callable[[int], QosVector]) -> QosVector:
    """QoS of a composite expression, aggregated bottom-up.

    ``qos_of`` maps leaf service ids to their QoS (a mapping, a
    ``Repository`` or any callable).
    """
    lookup = _qos_lookup(qos_of)

    def agg(e: Expr) -> QosVector:
        if isinstance(e, bool):
            raise ModelError(f"invalid expression leaf {e!r}")
        if isinstance(e, int):
            return lookup(e)
        if isinstance(e, (Sequence, Parallel)):
            if not e.children:
                raise ModelError(f"{type(e).__name__} needs at least one child")
            parts = [agg(c) for c in e.children]
            t = sum(q.t for q in parts) if isinstance(e, Sequence) else max(q.t for q in parts)
            return QosVector(
                t=t,
                ct=sum(q.ct for q in parts),
                r=math.prod(q.r for q in parts),
                a=math.prod(q.a for q in parts),
            )
        if isinstance(e, Choice):
            if len(e.children) != len(e.probabilities) or not e.children:
                raise ModelError("choice needs one probability per branch")
            if any(p < 0 for p in e.probabilities) or abs(sum(e.probabilities) - 1.0) > 1e-9:
                raise ModelError(f"choice probabilities must sum to 1, got {sum(e.probabilities)}")
            parts = [agg(c) for c in e.children]
            ps = e.probabilities
            return QosVector(
                t=sum(p * q.t for p, q in zip(ps, parts)),
                ct=sum(p * q.ct for p, q in zip(ps, parts)),
                r=sum(p * q.r for p, q in zip(ps, parts)),
                a=sum(p * q.a for p, q in zip(ps, parts)),
            )
        if isinstance(e, Iterate):
            if e.loops < 0:
                raise ModelError(f"iteration count must be >= 0, got {e.loops}")
            q = agg(e.child)
            return QosVector(t=e.loops * q.t, ct=e.loops * q.ct, r=q.r**e.loops, a=q.a**e.loops)
        raise ModelError(f"invalid expression node {e!r}")

    return agg(expr)


def _qos_lookup(qos_of) -> Callable[[int], QosVector]:
    if callable(qos_of) and not isinstance(qos_of, Mapping):
        return qos_of
    if hasattr(qos_of, "services") and not isinstance(qos_of, Mapping):
        services = qos_of.services

        def from_repo(i: int) -> QosVector:
            if not 0 <= i < len(services):
                raise ModelError(f"unknown service id {i}")
            return services[i].qos

        return from_repo

    def from_map(i: int) -> QosVector:
        try:
            return qos_of[i]
        except KeyError:
            raise ModelError(f"unknown service id {i}") from None

    return from_map


def aggregate_dag(
    nodes: Iterable[int],
    edges: Iterable[tuple[int, int]],
    qos_of: Mapping[int, QosVector] | Callable[[int], QosVector],
) -> QosVector:
    """QoS of a Start-to-End DAG.

    Each service node counts once towards A, R and CT; T is the critical
    path over node response times. ``edges`` use ``START``/``END`` for the
    sentinels.
    """
    lookup = _qos_lookup(qos_of)
    nodes = list(nodes)
    qos = {n: lookup(n) for n in nodes}
    preds: dict[int, list[int]] = {n: [] for n in nodes}
    preds[END] = []
    for src, dst in edges:
        if dst not in preds:
            raise ModelError(f"edge into unknown node {dst}")
        if src != START and src not in qos:
            raise ModelError(f"edge from unknown node {src}")
        preds[dst].append(src)
    if not preds[END]:
        raise ModelError("graph does not connect Start to End")

    finish: dict[int, float] = {START: 0.0}
    visiting: set[int] = set()

    def finish_time(n: int) -> float:
        if n in finish:
            return finish[n]
        if n in visiting:
            raise ModelError("composition graph has a cycle")
        visiting.add(n)
        ps = preds[n]
        if not ps:
            raise ModelError(f"service {n} is not connected to Start")
        start = max(finish_time(p) for p in ps)
        finish[n] = start + (qos[n].t if n != END else 0.0)
        visiting.discard(n)
        return finish[n]

    t = finish_time(END)
    return QosVector(
        t=t,
        ct=sum(q.ct for q in qos.values()),
        r=math.prod(q.r for q in qos.values()),
        a=math.prod(q.a for q in qos.values()),
    )
