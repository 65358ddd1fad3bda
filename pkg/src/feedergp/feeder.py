"""Radial multiphase feeder model.

Buses, line segments, loads and DER units form a directed radial graph
rooted at the substation source bus. Phases are one-character strings
('a', 'b', 'c'); multi-phase sets are canonical strings like "abc" or
"ac", always in a < b < c order. All electrical quantities are stored in
the units of the feeder description document (ohms, kW, kvar); per-unit
conversion happens inside the solvers using the feeder bases.
"""

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import FeederValidationError

PHASES = "abc"

# Nominal phase angles (radians) used for flat starts and the linearized
# phase-coupling operators: a at 0, b at -120 degrees, c at +120 degrees.
PHASE_ANGLES = {"a": 0.0, "b": -2.0 * np.pi / 3.0, "c": 2.0 * np.pi / 3.0}


def canon_phases(phases: str) -> str:
    """Validate a phase set and return it in canonical a < b < c order."""
    if not phases:
        raise FeederValidationError("phase set is empty")
    seen = set()
    for p in phases:
        if p not in PHASES:
            raise FeederValidationError(f"unknown phase {p!r}")
        if p in seen:
            raise FeederValidationError(f"duplicate phase {p!r} in {phases!r}")
        seen.add(p)
    return "".join(p for p in PHASES if p in seen)


@dataclass(frozen=True)
class Bus:
    id: str
    phases: str
    v_min: float = 0.95
    v_max: float = 1.05

    def __post_init__(self):
        object.__setattr__(self, "phases", canon_phases(self.phases))
        if not (0.0 < self.v_min < self.v_max):
            raise FeederValidationError(
                f"bus {self.id}: voltage bounds must satisfy 0 < v_min < v_max"
            )


@dataclass(frozen=True)
class LineSegment:
    """Series line segment with a complex impedance matrix in ohms.

    ``impedance`` is a k x k complex matrix over the segment's present
    phases (in canonical order), including mutual terms. Tuple-of-tuples
    storage keeps the segment hashable and immutable; use ``z_matrix``
    for the numpy view.
    """

    from_bus: str
    to_bus: str
    phases: str
    impedance: tuple

    def __post_init__(self):
        object.__setattr__(self, "phases", canon_phases(self.phases))
        z = np.asarray(self.impedance, dtype=complex)
        k = len(self.phases)
        if z.shape != (k, k):
            raise FeederValidationError(
                f"line {self.from_bus}-{self.to_bus}: impedance matrix is "
                f"{z.shape}, expected ({k}, {k}) for phases {self.phases!r}"
            )
        if np.any(z.diagonal().real <= 0):
            raise FeederValidationError(
                f"line {self.from_bus}-{self.to_bus}: diagonal resistance must be positive"
            )
        object.__setattr__(self, "impedance", tuple(tuple(row) for row in z))

    @property
    def z_matrix(self) -> np.ndarray:
        return np.asarray(self.impedance, dtype=complex)


@dataclass(frozen=True)
class LoadPoint:
    bus: str
    phase: str
    base_p_kw: float
    base_q_kvar: float
    loadshape: str

    def __post_init__(self):
        if self.phase not in PHASES:
            raise FeederValidationError(f"load at {self.bus}: unknown phase {self.phase!r}")
        if self.base_p_kw < 0:
            raise FeederValidationError(f"load at {self.bus}: base_p_kw must be >= 0")


@dataclass(frozen=True)
class DerUnit:
    """PV unit injecting real power, unity power factor unless q_setpoint_kvar set."""

    bus: str
    phases: str
    rated_kw: float
    q_setpoint_kvar: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "phases", canon_phases(self.phases))
        if len(self.phases) not in (1, 3):
            raise FeederValidationError(
                f"der at {self.bus}: must be single- or three-phase, got {self.phases!r}"
            )
        if self.rated_kw <= 0:
            raise FeederValidationError(f"der at {self.bus}: rated_kw must be positive")


@dataclass(frozen=True)
class Feeder:
    """Validated radial feeder. Immutable after construction; derived
    structures (BFS order, flatten index, solver prep) are cached and
    safe to share read-only across concurrent workers.
    """

    source_bus: str
    source_vpu: tuple
    buses: tuple
    lines: tuple
    loads: tuple
    ders: tuple
    sbase_kva: float
    vbase_kv: float

    def __post_init__(self):
        object.__setattr__(self, "source_vpu", tuple(float(v) for v in self.source_vpu))
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "loads", tuple(self.loads))
        object.__setattr__(self, "ders", tuple(self.ders))
        _validate(self)

    # -- basic lookups ------------------------------------------------

    @cached_property
    def bus_map(self) -> dict:
        return {b.id: b for b in self.buses}

    @property
    def zbase_ohm(self) -> float:
        """Per-phase impedance base: (kV line-to-neutral)^2 * 1000 / kVA."""
        return self.vbase_kv**2 * 1000.0 / self.sbase_kva

    # -- tree structure -----------------------------------------------

    @cached_property
    def bfs_order(self) -> tuple:
        """Bus ids breadth-first from the source, neighbors in id order."""
        adj: dict = {b.id: [] for b in self.buses}
        for ln in self.lines:
            adj[ln.from_bus].append(ln.to_bus)
            adj[ln.to_bus].append(ln.from_bus)
        order = [self.source_bus]
        seen = {self.source_bus}
        queue = deque([self.source_bus])
        while queue:
            u = queue.popleft()
            for v in sorted(adj[u]):
                if v not in seen:
                    seen.add(v)
                    order.append(v)
                    queue.append(v)
        return tuple(order)

    @cached_property
    def parent(self) -> dict:
        """Map bus id -> (parent bus id, LineSegment). Source maps to None."""
        edge_map = {}
        for ln in self.lines:
            edge_map[frozenset((ln.from_bus, ln.to_bus))] = ln
        out = {self.source_bus: None}
        pos = {b: i for i, b in enumerate(self.bfs_order)}
        for b in self.bfs_order[1:]:
            # parent is the neighbor that appears earlier in BFS order
            candidates = []
            for ln in self.lines:
                if b in (ln.from_bus, ln.to_bus):
                    other = ln.to_bus if ln.from_bus == b else ln.from_bus
                    if pos[other] < pos[b]:
                        candidates.append((other, ln))
            out[b] = min(candidates, key=lambda c: pos[c[0]])
        return out

    @cached_property
    def flatten(self) -> tuple:
        """Canonical (bus id, phase) ordering for all vectorized quantities.

        Breadth-first from the source, phases in a, b, c order within a
        bus; the source bus is excluded (its voltage is fixed).
        """
        pairs = []
        for b in self.bfs_order[1:]:
            for p in self.bus_map[b].phases:
                pairs.append((b, p))
        return tuple(pairs)

    @cached_property
    def flat_index(self) -> dict:
        return {pair: i for i, pair in enumerate(self.flatten)}

    @property
    def n_nodes(self) -> int:
        """Total phase-node count D (source excluded)."""
        return len(self.flatten)

    @cached_property
    def depth(self) -> dict:
        """Hop count from the source per bus id."""
        d = {self.source_bus: 0}
        for b in self.bfs_order[1:]:
            d[b] = d[self.parent[b][0]] + 1
        return d

    def source_voltage(self) -> dict:
        """Complex source phasors per phase, per-unit."""
        src = self.bus_map[self.source_bus]
        return {
            p: v * np.exp(1j * PHASE_ANGLES[p])
            for p, v in zip(src.phases, self.source_vpu)
        }


def flatten_index(feeder: Feeder) -> list:
    """Ordered (bus id, phase) pairs defining the flattening of nodal
    vectors; input vectors have length 2 * len(result), outputs len(result)."""
    return list(feeder.flatten)


# -- validation --------------------------------------------------------


def _validate(f: Feeder) -> None:
    ids = [b.id for b in f.buses]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise FeederValidationError(f"duplicate bus ids: {dup}")
    bus_map = {b.id: b for b in f.buses}

    if f.source_bus not in bus_map:
        raise FeederValidationError(f"source bus {f.source_bus!r} not defined")
    src = bus_map[f.source_bus]
    if len(f.source_vpu) != len(src.phases):
        raise FeederValidationError(
            f"source voltage has {len(f.source_vpu)} entries for phases {src.phases!r}"
        )
    if any(v <= 0 for v in f.source_vpu):
        raise FeederValidationError("source voltage magnitudes must be positive")
    if f.sbase_kva <= 0 or f.vbase_kv <= 0:
        raise FeederValidationError("per-unit bases must be positive")

    for ln in f.lines:
        for end in (ln.from_bus, ln.to_bus):
            if end not in bus_map:
                raise FeederValidationError(f"line references unknown bus {end!r}")
        for p in ln.phases:
            if p not in bus_map[ln.from_bus].phases or p not in bus_map[ln.to_bus].phases:
                raise FeederValidationError(
                    f"phase mismatch: line {ln.from_bus}-{ln.to_bus} carries phase "
                    f"{p!r} absent at an endpoint"
                )

    if len(f.lines) != len(f.buses) - 1:
        raise FeederValidationError(
            f"not radial: {len(f.lines)} lines for {len(f.buses)} buses "
            f"(expected {len(f.buses) - 1})"
        )

    # connectivity; with |E| = |N| - 1 this also rules out cycles
    adj: dict = {b.id: [] for b in f.buses}
    for ln in f.lines:
        adj[ln.from_bus].append(ln.to_bus)
        adj[ln.to_bus].append(ln.from_bus)
    seen = {f.source_bus}
    queue = deque([f.source_bus])
    while queue:
        u = queue.popleft()
        for v in sorted(adj[u]):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    if len(seen) != len(f.buses):
        missing = sorted(set(bus_map) - seen)
        raise FeederValidationError(f"unreachable buses (no path from source): {missing}")

    # every phase of a non-source bus must be fed through its parent edge
    pos = {b: i for i, b in enumerate(_bfs_ids(f))}
    for ln in f.lines:
        child = ln.to_bus if pos[ln.from_bus] < pos[ln.to_bus] else ln.from_bus
        for p in bus_map[child].phases:
            if p not in ln.phases:
                raise FeederValidationError(
                    f"phase mismatch: bus {child!r} phase {p!r} is not carried by "
                    f"its feeding line {ln.from_bus}-{ln.to_bus}"
                )

    for ld in f.loads:
        if ld.bus not in bus_map:
            raise FeederValidationError(f"load references unknown bus {ld.bus!r}")
        if ld.phase not in bus_map[ld.bus].phases:
            raise FeederValidationError(
                f"phase mismatch: load at {ld.bus!r} on absent phase {ld.phase!r}"
            )
    for der in f.ders:
        if der.bus not in bus_map:
            raise FeederValidationError(f"der references unknown bus {der.bus!r}")
        for p in der.phases:
            if p not in bus_map[der.bus].phases:
                raise FeederValidationError(
                    f"phase mismatch: der at {der.bus!r} on absent phase {p!r}"
                )


def _bfs_ids(f: Feeder) -> list:
    adj: dict = {b.id: [] for b in f.buses}
    for ln in f.lines:
        adj[ln.from_bus].append(ln.to_bus)
        adj[ln.to_bus].append(ln.from_bus)
    order = [f.source_bus]
    seen = {f.source_bus}
    queue = deque([f.source_bus])
    while queue:
        u = queue.popleft()
        for v in sorted(adj[u]):
            if v not in seen:
                seen.add(v)
                order.append(v)
                queue.append(v)
    return order
