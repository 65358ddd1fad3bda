import numpy as np
import pytest

from feedergp.feeder import Bus, Feeder, LineSegment, LoadPoint
from feedergp.synthetic import build_feeder_123, generate_synthetic_feeder


def make_two_bus(r=0.3, x=0.6, load_kw=80.0, load_kvar=30.0):
    """Single-phase source->child feeder; impedance in ohms at 2.4 kV / 1 MVA."""
    return Feeder(
        source_bus="src",
        source_vpu=(1.0,),
        buses=(Bus("src", "a"), Bus("child", "a")),
        lines=(LineSegment("src", "child", "a", ((complex(r, x),),)),),
        loads=(LoadPoint("child", "a", load_kw, load_kvar, "industrial"),),
        ders=(),
        sbase_kva=1000.0,
        vbase_kv=2.4,
    )


@pytest.fixture(scope="session")
def feeder_123():
    return build_feeder_123()


@pytest.fixture(scope="session")
def feeder_25():
    return generate_synthetic_feeder(25, "mixed", 10, seed=7)


@pytest.fixture()
def two_bus():
    return make_two_bus()


def two_bus_analytic_vmag(feeder):
    """Closed-form child voltage of a single-phase two-bus feeder.

    With series impedance r+jx (p.u.), constant-power draw p+jq (p.u.) and
    source magnitude vs, the child magnitude squared solves
    u^2 - (vs^2 - 2(rp+xq)) u + (r^2+x^2)(p^2+q^2) = 0; the high-voltage
    root is the operating point.
    """
    z = feeder.lines[0].z_matrix[0, 0] / feeder.zbase_ohm
    r, x = z.real, z.imag
    p = feeder.loads[0].base_p_kw / feeder.sbase_kva
    q = feeder.loads[0].base_q_kvar / feeder.sbase_kva
    vs = feeder.source_vpu[0]
    b = vs * vs - 2.0 * (r * p + x * q)
    disc = b * b - 4.0 * (r * r + x * x) * (p * p + q * q)
    u = 0.5 * (b + np.sqrt(disc))
    return float(np.sqrt(u))
