"""Nonlinear multiphase power flow by backward/forward sweep.

Ground-truth oracle for the whole package: given a feeder and a net-load
vector (consumption positive, per-unit, ordered [p_1..p_D, q_1..q_D] by
the feeder flattening), returns nodal voltage phasors that satisfy the
constant-power Kirchhoff equations to a stated apparent-power tolerance.

The sweep alternates backward current accumulation (leaves to source)
with forward voltage drops (source to leaves); both passes are
vectorized over buses at equal tree depth, so per-iteration cost is a
handful of numpy calls per tree level.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .feeder import PHASE_ANGLES, Feeder

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100
COLLAPSE_VPU = 0.5


@dataclass
class PfSolution:
    """Converged nodal solution over the feeder flattening (source excluded)."""

    v_mag: np.ndarray
    v_ang: np.ndarray
    iterations: int = 0

    def __post_init__(self):
        self.v_mag = np.asarray(self.v_mag, dtype=float)
        self.v_ang = np.asarray(self.v_ang, dtype=float)
        if self.v_mag.shape != self.v_ang.shape:
            raise ValueError("v_mag and v_ang must have equal length")
        if self.v_mag.ndim != 1:
            raise ValueError("PfSolution stores flat vectors")
        if np.any(self.v_mag <= 0):
            raise ValueError("voltage magnitudes must be strictly positive")


def validate_net_load(feeder: Feeder, load) -> np.ndarray:
    """Check a net-load vector: length 2D, finite. Returns a float array."""
    s = np.asarray(load, dtype=float)
    d = feeder.n_nodes
    if s.shape != (2 * d,):
        raise ValueError(f"net load vector has shape {s.shape}, expected ({2 * d},)")
    if not np.all(np.isfinite(s)):
        raise ValueError("net load vector contains non-finite entries")
    return s


class _SweepPrep:
    """Padded per-bus arrays for the sweep, cached on the feeder."""

    def __init__(self, feeder: Feeder):
        order = feeder.bfs_order
        n = len(order)
        self.n_bus = n
        self.bus_pos = {b: i for i, b in enumerate(order)}
        self.mask = np.zeros((n, 3), dtype=bool)
        for i, b in enumerate(order):
            for j, p in enumerate("abc"):
                self.mask[i, j] = p in feeder.bus_map[b].phases

        # feeding-edge impedance per non-source bus, padded to 3x3, p.u.
        zbase = feeder.zbase_ohm
        self.z_pad = np.zeros((n, 3, 3), dtype=complex)
        self.zinv_pad = np.zeros((n, 3, 3), dtype=complex)
        self.parent_idx = np.full(n, -1, dtype=np.int64)
        for i, b in enumerate(order[1:], start=1):
            pb, line = feeder.parent[b]
            self.parent_idx[i] = self.bus_pos[pb]
            cols = [j for j, p in enumerate("abc") if p in line.phases]
            z = line.z_matrix / zbase
            for r, jr in enumerate(cols):
                for c, jc in enumerate(cols):
                    self.z_pad[i, jr, jc] = z[r, c]
            zinv = np.linalg.inv(z)
            for r, jr in enumerate(cols):
                for c, jc in enumerate(cols):
                    self.zinv_pad[i, jr, jc] = zinv[r, c]

        depth = np.zeros(n, dtype=np.int64)
        for i in range(1, n):
            depth[i] = depth[self.parent_idx[i]] + 1
        self.levels = [
            np.flatnonzero(depth == d) for d in range(1, int(depth.max()) + 1 if n > 1 else 1)
        ]

        # flat (bus, phase) -> padded (bus index, phase column)
        d_nodes = feeder.n_nodes
        self.flat_bus = np.zeros(d_nodes, dtype=np.int64)
        self.flat_ph = np.zeros(d_nodes, dtype=np.int64)
        for k, (b, p) in enumerate(feeder.flatten):
            self.flat_bus[k] = self.bus_pos[b]
            self.flat_ph[k] = "abc".index(p)

        # flat or padded source phasors
        src = feeder.source_voltage()
        self.v_source = np.zeros(3, dtype=complex)
        for j, p in enumerate("abc"):
            # absent source phases never feed anything; keep harmless nominal
            self.v_source[j] = src.get(p, np.exp(1j * PHASE_ANGLES[p]))


def _prep(feeder: Feeder) -> _SweepPrep:
    cache = feeder.__dict__.setdefault("_pf_prep", None)
    if cache is None:
        cache = _SweepPrep(feeder)
        feeder.__dict__["_pf_prep"] = cache
    return cache


def _spec_power(feeder: Feeder, load: np.ndarray, prep: _SweepPrep) -> np.ndarray:
    """Net complex consumption per (bus, phase), padded (n_bus, 3)."""
    d = feeder.n_nodes
    s = np.zeros((prep.n_bus, 3), dtype=complex)
    np.add.at(s, (prep.flat_bus, prep.flat_ph), load[:d] + 1j * load[d:])
    return s


def _flat_voltage(prep: _SweepPrep, v_pad: np.ndarray) -> np.ndarray:
    return v_pad[prep.flat_bus, prep.flat_ph]


def _padded_voltage(feeder: Feeder, candidate: PfSolution, prep: _SweepPrep) -> np.ndarray:
    v = np.tile(prep.v_source, (prep.n_bus, 1))
    phasor = candidate.v_mag * np.exp(1j * candidate.v_ang)
    v[prep.flat_bus, prep.flat_ph] = phasor
    return v


def _mismatch_padded(prep: _SweepPrep, s_spec: np.ndarray, v_pad: np.ndarray) -> np.ndarray:
    """|S_spec - S_delivered| per (bus, phase) from exact branch currents."""
    dv = v_pad[prep.parent_idx] - v_pad  # row 0 is source-source, zero
    j_edge = np.einsum("bij,bj->bi", prep.zinv_pad, dv)
    j_edge[0] = 0.0
    inj = j_edge.copy()  # current arriving through the feeding edge
    np.subtract.at(inj, prep.parent_idx[1:], j_edge[1:])  # minus departures to children
    s_calc = v_pad * np.conj(inj)
    res = np.abs(s_calc - s_spec)
    res[0] = 0.0  # slack bus absorbs the imbalance by definition
    return res


def mismatch(feeder: Feeder, load, candidate: PfSolution) -> np.ndarray:
    """Apparent-power Kirchhoff residual per phase-node, p.u.

    Zero exactly when the candidate voltages solve the constant-power
    equations for the given net load. Length D, ordered by flatten_index.
    """
    s = validate_net_load(feeder, load)
    d = feeder.n_nodes
    if candidate.v_mag.shape != (d,):
        raise ValueError(
            f"candidate has {candidate.v_mag.shape[0]} nodes, feeder has {d}"
        )
    prep = _prep(feeder)
    v_pad = _padded_voltage(feeder, candidate, prep)
    res = _mismatch_padded(prep, _spec_power(feeder, s, prep), v_pad)
    return res[prep.flat_bus, prep.flat_ph]


def solve_nonlinear(
    feeder: Feeder,
    load,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> PfSolution:
    """Solve the constant-power multiphase power flow.

    Parameters
    ----------
    feeder : Feeder
    load : array-like, length 2D
        Net consumption [p; q] in per-unit over flatten_index; DER output
        enters as negative consumption.
    tol : float
        Convergence threshold on the max apparent-power mismatch, p.u.
    max_iter : int
        Sweep iteration budget.

    Returns
    -------
    PfSolution
        Voltage magnitudes (p.u.) and angles (radians) with the sweep
        iteration count.

    Raises
    ------
    ConvergenceError
        If the mismatch fails to reach tol, or any voltage magnitude
        collapses below 0.5 p.u. (divergence guard).
    """
    s = validate_net_load(feeder, load)
    prep = _prep(feeder)
    s_spec = _spec_power(feeder, s, prep)

    v = np.tile(prep.v_source, (prep.n_bus, 1))  # flat start
    for it in range(max_iter + 1):
        res = _mismatch_padded(prep, s_spec, v)
        worst = float(res.max()) if res.size else 0.0
        if worst < tol:
            flat_v = _flat_voltage(prep, v)
            return PfSolution(np.abs(flat_v), np.angle(flat_v), iterations=it)
        if it == max_iter:
            break

        # nodal current draw under constant power
        i_draw = np.zeros_like(v)
        np.divide(np.conj(s_spec), np.conj(v), out=i_draw, where=prep.mask)

        # backward: accumulate subtree draw into each feeding edge
        cur = i_draw.copy()
        j_edge = np.zeros_like(v)
        for sel in reversed(prep.levels):
            j_edge[sel] = cur[sel]
            np.add.at(cur, prep.parent_idx[sel], cur[sel])

        # forward: voltage drop from the already-updated parent
        for sel in prep.levels:
            drop = np.einsum("bij,bj->bi", prep.z_pad[sel], j_edge[sel])
            v[sel] = v[prep.parent_idx[sel]] - drop

        vm = np.abs(v[prep.mask])
        if np.any(vm < COLLAPSE_VPU):
            raise ConvergenceError(
                f"voltage collapse: magnitude fell below {COLLAPSE_VPU} p.u. "
                f"after {it + 1} sweep iterations (min {vm.min():.4f})"
            )

    k, ph = np.unravel_index(np.argmax(res), res.shape)
    bus_id = feeder.bfs_order[int(k)]
    raise ConvergenceError(
        f"power flow did not converge in {max_iter} iterations; "
        f"worst mismatch {worst:.3e} p.u. at bus {bus_id} phase {'abc'[int(ph)]}"
    )
