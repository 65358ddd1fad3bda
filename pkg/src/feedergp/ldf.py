"""Linearized three-phase branch-flow model (LinDistFlow).

Lossless per-phase flow accumulation plus the linearized squared-voltage
drop with full phase coupling: for an edge feeding bus j,

    v_i^p - v_j^p = sum_q 2 Re[ gamma^{pq} S_j^q conj(z^{pq}) ]

where gamma^{pq} = alpha_p / alpha_q rotates same-phase flows onto the
off-diagonal couplings under the nominal 120-degree phase operators.
Linear in the net load by construction.
"""

from dataclasses import dataclass

import numpy as np

from .feeder import PHASE_ANGLES, Feeder
from .pf import _prep, validate_net_load

_ALPHA = np.exp(1j * np.array([PHASE_ANGLES[p] for p in "abc"]))
_GAMMA = _ALPHA[:, None] / _ALPHA[None, :]


@dataclass
class LdfSolution:
    """Squared voltage magnitudes over the flattening plus per-edge flows.

    Flows are keyed by (from_bus, to_bus, phase) in the tree's
    parent-to-child orientation, per-unit, lossless.
    """

    v_sq: np.ndarray
    p_flow: dict
    q_flow: dict

    def __post_init__(self):
        self.v_sq = np.asarray(self.v_sq, dtype=float)
        if self.v_sq.ndim != 1:
            raise ValueError("v_sq must be a flat vector")
        if set(self.p_flow) != set(self.q_flow):
            raise ValueError("p_flow and q_flow must share keys")


def solve_ldf(feeder: Feeder, load) -> LdfSolution:
    """Solve the linearized model for a net-load vector (length 2D).

    Backward pass accumulates lossless per-phase complex flows; forward
    pass applies the coupled voltage-drop equation from the source. The
    returned flows and v_sq satisfy both equation sets to float
    round-off (see ldf_residual).
    """
    s = validate_net_load(feeder, load)
    prep = _prep(feeder)
    d = feeder.n_nodes

    s_node = np.zeros((prep.n_bus, 3), dtype=complex)
    np.add.at(s_node, (prep.flat_bus, prep.flat_ph), s[:d] + 1j * s[d:])

    # backward: subtree sums; flow[i] is the complex flow on the edge feeding bus i
    cur = s_node.copy()
    flow = np.zeros_like(s_node)
    for sel in reversed(prep.levels):
        flow[sel] = cur[sel]
        np.add.at(cur, prep.parent_idx[sel], cur[sel])

    # forward: coupled squared-voltage drop
    v_sq = np.tile(np.abs(prep.v_source) ** 2, (prep.n_bus, 1))
    coupling = _GAMMA[None, :, :] * np.conj(prep.z_pad)
    for sel in prep.levels:
        drop = 2.0 * np.real(np.einsum("bpq,bq->bp", coupling[sel], flow[sel]))
        v_sq[sel] = v_sq[prep.parent_idx[sel]] - drop

    p_flow, q_flow = {}, {}
    order = feeder.bfs_order
    for i in range(1, prep.n_bus):
        b = order[i]
        pb, line = feeder.parent[b]
        for p in line.phases:
            j = "abc".index(p)
            p_flow[(line.from_bus, line.to_bus, p)] = float(flow[i, j].real)
            q_flow[(line.from_bus, line.to_bus, p)] = float(flow[i, j].imag)

    return LdfSolution(v_sq[prep.flat_bus, prep.flat_ph], p_flow, q_flow)


def ldf_voltage_mag(sol: LdfSolution) -> np.ndarray:
    """Voltage magnitudes sqrt(v_sq); errors if the linear model broke down."""
    if np.any(sol.v_sq <= 0):
        worst = float(sol.v_sq.min())
        raise ValueError(
            f"linear model breakdown: squared voltage reached {worst:.4g} p.u.^2 "
            "(load far beyond the linearization's validity)"
        )
    return np.sqrt(sol.v_sq)


def ldf_residual(feeder: Feeder, load, sol: LdfSolution) -> float:
    """Max absolute residual of the flow-balance and voltage-drop equations.

    Rebuilt from the solution's public fields (flow dicts and v_sq), not
    the solver's internals, so it is a genuine substitution check.
    """
    s = validate_net_load(feeder, load)
    d = feeder.n_nodes
    idx = feeder.flat_index
    order = feeder.bfs_order
    src_v = {p: v**2 for p, v in zip(feeder.bus_map[feeder.source_bus].phases, feeder.source_vpu)}

    def vsq_at(bus, phase):
        if bus == feeder.source_bus:
            return src_v[phase]
        return float(sol.v_sq[idx[(bus, phase)]])

    children = {b: [] for b in order}
    for b in order[1:]:
        children[feeder.parent[b][0]].append(b)

    worst = 0.0
    for b in order[1:]:
        pb, line = feeder.parent[b]
        key_base = (line.from_bus, line.to_bus)
        phs = line.phases
        k = len(phs)
        flow_vec = np.array(
            [sol.p_flow[key_base + (p,)] + 1j * sol.q_flow[key_base + (p,)] for p in phs]
        )
        # flow balance: inflow = local net draw + outflows to children
        for p in phs:
            s_local = 0.0 + 0.0j
            if (b, p) in idx:
                kk = idx[(b, p)]
                s_local = s[kk] + 1j * s[d + kk]
            out = 0.0 + 0.0j
            for c in children[b]:
                cline = feeder.parent[c][1]
                ckey = (cline.from_bus, cline.to_bus, p)
                if ckey in sol.p_flow:
                    out += sol.p_flow[ckey] + 1j * sol.q_flow[ckey]
            bal = sol.p_flow[key_base + (p,)] + 1j * sol.q_flow[key_base + (p,)] - s_local - out
            worst = max(worst, abs(bal))
        # voltage drop with phase coupling
        z = line.z_matrix / feeder.zbase_ohm
        cols = ["abc".index(p) for p in phs]
        gamma = _GAMMA[np.ix_(cols, cols)]
        drops = 2.0 * np.real((gamma * np.conj(z)) @ flow_vec)
        for r, p in enumerate(phs):
            resid = vsq_at(pb, p) - vsq_at(b, p) - drops[r]
            worst = max(worst, abs(float(resid)))
    return worst
