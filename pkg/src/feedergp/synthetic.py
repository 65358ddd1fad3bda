"""Seeded synthetic feeder construction.

Random radial trees with realistic segment impedances (0.01 to 1.0 ohm),
mixed phasing, loads and PV units. Load magnitudes are calibrated by
actually solving the peak-load power flow and rescaling until the lowest
voltage sits near a target (default 0.94 p.u.), so generated feeders of
any size land in a sane operating range. All numeric fields are rounded
to 9 significant digits so the text form round-trips bit-exactly.
"""

import numpy as np

from .errors import ConvergenceError
from .feeder import Bus, DerUnit, Feeder, LineSegment, LoadPoint
from .pf import solve_nonlinear
from .scenario import LOADSHAPE_CLASSES, builtin_loadshape

PHASE_MIXES = ("single", "three", "mixed")


def _r9(x: float) -> float:
    return float(f"{x:.9g}")


def _segment_impedance(rng: np.random.Generator, phases: str) -> tuple:
    k = len(phases)
    r_diag = rng.uniform(0.04, 0.38, size=k)
    x_diag = rng.uniform(0.06, 0.42, size=k)
    z = np.zeros((k, k), dtype=complex)
    for i in range(k):
        z[i, i] = r_diag[i] + 1j * x_diag[i]
    if k > 1:
        # shared-corridor coupling: small mutual resistance, moderate reactance
        rm = 0.15 * float(r_diag.mean())
        xm = 0.45 * float(x_diag.mean())
        for i in range(k):
            for j in range(k):
                if i != j:
                    z[i, j] = rm + 1j * xm
    return tuple(
        tuple(complex(_r9(v.real), _r9(v.imag)) for v in row) for row in z
    )


def _draw_phases(rng: np.random.Generator, parent_phases: str, mix: str) -> str:
    if mix == "three":
        return "abc"
    if mix == "single":
        return "a"
    # mixed: mostly keep the parent's phasing, sometimes narrow it
    u = rng.random()
    if len(parent_phases) == 1 or u < 0.55:
        return parent_phases
    if len(parent_phases) == 3 and u < 0.75:
        pair = ["ab", "ac", "bc"][rng.integers(3)]
        return pair
    return parent_phases[rng.integers(len(parent_phases))]


def _scaled_loads(loads, factor):
    return tuple(
        LoadPoint(ld.bus, ld.phase, _r9(ld.base_p_kw * factor), _r9(ld.base_q_kvar * factor), ld.loadshape)
        for ld in loads
    )


def _peak_net_load(feeder: Feeder) -> np.ndarray:
    """Peak consumption vector: every load at its loadshape maximum, no PV."""
    d = feeder.n_nodes
    idx = feeder.flat_index
    s = np.zeros(2 * d)
    peaks = {k: max(builtin_loadshape(k).multipliers) for k in LOADSHAPE_CLASSES}
    for ld in feeder.loads:
        k = idx[(ld.bus, ld.phase)]
        s[k] += ld.base_p_kw * peaks[ld.loadshape] / feeder.sbase_kva
        s[d + k] += ld.base_q_kvar * peaks[ld.loadshape] / feeder.sbase_kva
    return s


def calibrate_loads(feeder: Feeder, v_target: float = 0.94, tol: float = 0.005) -> Feeder:
    """Rescale all load bases (and PV ratings proportionally) until the
    minimum peak-load voltage is within tol of v_target."""
    if not feeder.loads:
        return feeder
    current = feeder
    for _ in range(12):
        try:
            sol = solve_nonlinear(current, _peak_net_load(current))
        except ConvergenceError:
            current = _rebuild(current, 0.25)
            continue
        v_min = float(sol.v_mag.min())
        if abs(v_min - v_target) <= tol:
            return current
        drop = 1.0 - v_min
        if drop <= 1e-9:
            factor = 50.0  # essentially unloaded; scale up hard
        else:
            factor = (1.0 - v_target) / drop
            factor = float(np.clip(factor, 0.1, 50.0))
        current = _rebuild(current, factor)
    return current


def _rebuild(feeder: Feeder, factor: float) -> Feeder:
    ders = tuple(
        DerUnit(d.bus, d.phases, _r9(d.rated_kw * factor), _r9(d.q_setpoint_kvar * factor))
        for d in feeder.ders
    )
    return Feeder(
        source_bus=feeder.source_bus,
        source_vpu=feeder.source_vpu,
        buses=feeder.buses,
        lines=feeder.lines,
        loads=_scaled_loads(feeder.loads, factor),
        ders=ders,
        sbase_kva=feeder.sbase_kva,
        vbase_kv=feeder.vbase_kv,
    )


def generate_synthetic_feeder(
    n_buses: int,
    phase_mix: str = "mixed",
    n_der: int = 0,
    seed: int = 0,
    loadshape_classes: tuple = LOADSHAPE_CLASSES,
    load_probability: float = 0.75,
    customers_per_load: int = 4,
    v_target: float = 0.94,
    sbase_kva: float = 1000.0,
    vbase_kv: float = 2.4,
) -> Feeder:
    """Random radial feeder with ``n_buses`` buses (source included).

    phase_mix: "three" (all buses abc), "single" (all phase a), or
    "mixed" (phasing narrows going down laterals). Each served node-phase
    carries ``customers_per_load`` separate customer loads, so independent
    per-customer variability partially averages at the transformer, as on
    a real secondary. PV units are placed at random loaded buses.
    Reproducible from the seed; load magnitudes are calibrated so peak
    load pulls the weakest bus near ``v_target`` p.u.
    """
    if n_buses < 2:
        raise ValueError("need at least 2 buses")
    if phase_mix not in PHASE_MIXES:
        raise ValueError(f"phase_mix must be one of {PHASE_MIXES}")
    if n_der < 0:
        raise ValueError("n_der must be nonnegative")
    bad = [c for c in loadshape_classes if c not in LOADSHAPE_CLASSES]
    if bad or not loadshape_classes:
        raise ValueError(f"unknown loadshape classes {bad}")
    if customers_per_load < 1:
        raise ValueError("customers_per_load must be at least 1")

    rng = np.random.default_rng(seed)
    src_phases = "a" if phase_mix == "single" else "abc"
    buses = [Bus("sub", src_phases)]
    lines = []
    for i in range(1, n_buses):
        parent = buses[int(rng.integers(len(buses)))]
        phases = _draw_phases(rng, parent.phases, phase_mix)
        b = Bus(f"b{i}", phases)
        buses.append(b)
        lines.append(LineSegment(parent.id, b.id, phases, _segment_impedance(rng, phases)))

    # light per-bus starting loads; calibration sets the real scale
    scale0 = 25.0 / n_buses
    loads = []
    for b in buses[1:]:
        for p in b.phases:
            if rng.random() < load_probability:
                for _ in range(customers_per_load):
                    p_kw = rng.uniform(4.0, 16.0) * scale0 / customers_per_load
                    pf = rng.uniform(0.90, 0.97)
                    q_kvar = p_kw * np.tan(np.arccos(pf))
                    shape = loadshape_classes[int(rng.integers(len(loadshape_classes)))]
                    loads.append(LoadPoint(b.id, p, _r9(p_kw), _r9(q_kvar), shape))

    loaded_buses = sorted({ld.bus for ld in loads})
    ders = []
    if n_der > 0:
        if not loaded_buses:
            raise ValueError("cannot place PV units on a feeder with no loads")
        picks = rng.choice(len(loaded_buses), size=min(n_der, len(loaded_buses)), replace=False)
        bus_map = {b.id: b for b in buses}
        for k in sorted(int(i) for i in picks):
            b = bus_map[loaded_buses[k]]
            ph = b.phases if len(b.phases) == 3 else b.phases[int(rng.integers(len(b.phases)))]
            # community-scale PV, high-penetration regime: midday reverse
            # flow and overvoltage are the operating conditions of interest
            rated = rng.uniform(30.0, 90.0) * scale0
            ders.append(DerUnit(b.id, ph, _r9(rated), 0.0))

    vpu = tuple(1.0 for _ in src_phases)
    feeder = Feeder(
        source_bus="sub",
        source_vpu=vpu,
        buses=tuple(buses),
        lines=tuple(lines),
        loads=tuple(loads),
        ders=tuple(ders),
        sbase_kva=sbase_kva,
        vbase_kv=vbase_kv,
    )
    return calibrate_loads(feeder, v_target=v_target)


# fixed phase-mix recipe for the 123-bus unbalanced feeder: counts of
# non-source buses per phase set, giving 99/84/95 phase-node totals
_MIX_123 = [
    ("abc", 65),
    ("ab", 7),
    ("ac", 13),
    ("bc", 6),
    ("a", 14),
    ("b", 6),
    ("c", 11),
]
_UNLOADED_SPURS_123 = 2  # trailing three-phase chains left load-free


def build_feeder_123(v_target: float = 0.975) -> Feeder:
    """Deterministic 123-bus unbalanced feeder: 122 non-source buses with a
    fixed per-phase-set mix (278 phase nodes total), mixed loadshapes,
    a handful of PV units, and two deliberately unloaded spur chains.
    Each served node-phase carries two customer loads so per-customer
    variability partially averages out, as on a real secondary."""
    rng = np.random.default_rng(123)
    buses = [Bus("sub", "abc")]
    lines = []
    unloaded = set()

    phase_seq = []
    for phases, count in _MIX_123:
        phase_seq.extend([phases] * count)

    # reserve the last 6 three-phase buses as two 3-bus unloaded spurs
    spur_ids = []
    three_idx = [i for i, p in enumerate(phase_seq) if p == "abc"]
    reserved = set(three_idx[-3 * _UNLOADED_SPURS_123 :])

    def candidates(target):
        # spur buses never parent regular buses, keeping spur subtrees load-free
        return [b for b in buses if set(target) <= set(b.phases) and b.id not in unloaded]

    spur_tail = None
    for i, phases in enumerate(phase_seq):
        bid = f"n{i + 1}"
        if i in reserved:
            # chain spur buses one after another off a random trunk bus
            if spur_tail is None or len(spur_ids) % 3 == 0:
                cands = candidates("abc")
                parent = cands[int(rng.integers(len(cands)))]
            else:
                parent = spur_tail
            spur_tail = Bus(bid, phases)
            spur_ids.append(bid)
            unloaded.add(bid)
            b = spur_tail
        else:
            cands = candidates(phases)
            parent = cands[int(rng.integers(len(cands)))]
            b = Bus(bid, phases)
        buses.append(b)
        lines.append(LineSegment(parent.id, b.id, b.phases, _segment_impedance(rng, b.phases)))

    loads = []
    for b in buses[1:]:
        if b.id in unloaded:
            continue
        for p in b.phases:
            if rng.random() < 0.72:
                for _ in range(2):
                    p_kw = rng.uniform(2.5, 9.0)
                    pf = rng.uniform(0.90, 0.96)
                    q_kvar = p_kw * np.tan(np.arccos(pf))
                    shape = LOADSHAPE_CLASSES[int(rng.integers(3))]
                    loads.append(LoadPoint(b.id, p, _r9(p_kw), _r9(q_kvar), shape))

    loaded_buses = sorted({ld.bus for ld in loads})
    picks = rng.choice(len(loaded_buses), size=6, replace=False)
    bus_map = {b.id: b for b in buses}
    ders = []
    for k in sorted(int(i) for i in picks):
        b = bus_map[loaded_buses[k]]
        ph = b.phases if len(b.phases) == 3 else b.phases[int(rng.integers(len(b.phases)))]
        ders.append(DerUnit(b.id, ph, _r9(rng.uniform(8.0, 25.0)), 0.0))

    feeder = Feeder(
        source_bus="sub",
        source_vpu=(1.0, 1.0, 1.0),
        buses=tuple(buses),
        lines=tuple(lines),
        loads=tuple(loads),
        ders=tuple(ders),
        sbase_kva=1000.0,
        vbase_kv=2.4,
    )
    return calibrate_loads(feeder, v_target=v_target)
