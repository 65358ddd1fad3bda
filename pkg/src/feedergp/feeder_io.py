"""Plain-text feeder description format.

Sectioned line-oriented format::

    [source]
    bus=slack  phases=abc  vpu=1.0,1.0,1.0  sbase_kva=1000  vbase_kv=2.4

    [bus]
    # id  phases  v_min  v_max
    b1  abc  0.95  1.05

    [line]
    # from  to  phases  z(ohm) row-major, entries r+jx separated by spaces
    slack  b1  abc  0.3+j0.6 0.1+j0.2 0.1+j0.2  0.1+j0.2 0.3+j0.6 0.1+j0.2  0.1+j0.2 0.1+j0.2 0.3+j0.6

    [load]
    # bus  phase  p_kw  q_kvar  loadshape
    b1  a  25  8  residential

    [der]
    # bus  phases  rated_kw  q_kvar
    b1  a  10  0

Whitespace separated fields, ``#`` starts a comment, blank lines ignored.
Numbers are emitted at 9 significant digits so emit/parse round-trips are
bit-exact for feeders produced by this package.
"""

from .errors import FeederParseError
from .feeder import Bus, DerUnit, Feeder, LineSegment, LoadPoint

_SECTIONS = ("source", "bus", "line", "load", "der")


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _fmt_complex(z: complex) -> str:
    sign = "+" if z.imag >= 0 else "-"
    return f"{_fmt(z.real)}{sign}j{_fmt(abs(z.imag))}"


def _parse_complex(tok: str, line_no: int) -> complex:
    """Parse 'r+jx' / 'r-jx' / bare real."""
    s = tok.strip()
    if "j" not in s:
        try:
            return complex(float(s), 0.0)
        except ValueError:
            raise FeederParseError(f"bad number {tok!r}", line_no) from None
    # split at the last +/- that precedes the 'j'
    jpos = s.index("j")
    if jpos == 0 or s[jpos - 1] not in "+-":
        raise FeederParseError(f"bad complex number {tok!r} (expected r+jx)", line_no)
    sign = -1.0 if s[jpos - 1] == "-" else 1.0
    real_part = s[: jpos - 1]
    imag_part = s[jpos + 1 :]
    try:
        re_v = float(real_part) if real_part not in ("", "+", "-") else 0.0
        im_v = sign * float(imag_part)
    except ValueError:
        raise FeederParseError(f"bad complex number {tok!r}", line_no) from None
    return complex(re_v, im_v)


def parse_feeder(text: str) -> Feeder:
    """Parse a feeder description document. Raises FeederParseError with a
    line number on malformed input; the assembled feeder is validated by
    the Feeder constructor."""
    source = None
    buses, lines, loads, ders = [], [], [], []
    section = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise FeederParseError(f"malformed section header {line!r}", line_no)
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise FeederParseError(f"unknown section {section!r}", line_no)
            continue
        if section is None:
            raise FeederParseError("content before any section header", line_no)
        toks = line.split()
        if section == "source":
            kv = {}
            for tok in toks:
                if "=" not in tok:
                    raise FeederParseError(f"expected key=value, got {tok!r}", line_no)
                k, v = tok.split("=", 1)
                kv[k] = v
            missing = {"bus", "phases", "vpu", "sbase_kva", "vbase_kv"} - set(kv)
            if missing:
                raise FeederParseError(f"source missing keys {sorted(missing)}", line_no)
            if source is not None:
                raise FeederParseError("duplicate [source] entry", line_no)
            try:
                source = {
                    "bus": kv["bus"],
                    "phases": kv["phases"],
                    "vpu": tuple(float(v) for v in kv["vpu"].split(",")),
                    "sbase_kva": float(kv["sbase_kva"]),
                    "vbase_kv": float(kv["vbase_kv"]),
                }
            except ValueError:
                raise FeederParseError("bad numeric value in source entry", line_no) from None
        elif section == "bus":
            if len(toks) not in (2, 4):
                raise FeederParseError(
                    f"bus row needs 2 or 4 fields (id phases [v_min v_max]), got {len(toks)}",
                    line_no,
                )
            try:
                if len(toks) == 4:
                    buses.append(Bus(toks[0], toks[1], float(toks[2]), float(toks[3])))
                else:
                    buses.append(Bus(toks[0], toks[1]))
            except ValueError:
                raise FeederParseError("bad numeric value in bus row", line_no) from None
        elif section == "line":
            if len(toks) < 4:
                raise FeederParseError("line row needs from to phases z...", line_no)
            frm, to, phases = toks[0], toks[1], toks[2]
            k = len(phases)
            ztoks = toks[3:]
            if len(ztoks) != k * k:
                raise FeederParseError(
                    f"line {frm}-{to}: expected {k * k} impedance entries for "
                    f"phases {phases!r}, got {len(ztoks)}",
                    line_no,
                )
            zvals = [_parse_complex(t, line_no) for t in ztoks]
            zmat = tuple(tuple(zvals[i * k + j] for j in range(k)) for i in range(k))
            lines.append(LineSegment(frm, to, phases, zmat))
        elif section == "load":
            if len(toks) != 5:
                raise FeederParseError(
                    f"load row needs bus phase p_kw q_kvar loadshape, got {len(toks)} fields",
                    line_no,
                )
            try:
                loads.append(
                    LoadPoint(toks[0], toks[1], float(toks[2]), float(toks[3]), toks[4])
                )
            except ValueError:
                raise FeederParseError("bad numeric value in load row", line_no) from None
        elif section == "der":
            if len(toks) != 4:
                raise FeederParseError(
                    f"der row needs bus phases rated_kw q_kvar, got {len(toks)} fields",
                    line_no,
                )
            try:
                ders.append(DerUnit(toks[0], toks[1], float(toks[2]), float(toks[3])))
            except ValueError:
                raise FeederParseError("bad numeric value in der row", line_no) from None
    if source is None:
        raise FeederParseError("missing [source] section")
    return Feeder(
        source_bus=source["bus"],
        source_vpu=source["vpu"],
        buses=tuple(buses),
        lines=tuple(lines),
        loads=tuple(loads),
        ders=tuple(ders),
        sbase_kva=source["sbase_kva"],
        vbase_kv=source["vbase_kv"],
    )


def emit_feeder(feeder: Feeder) -> str:
    """Serialize a feeder to the text format. Emitting, parsing and
    emitting again yields byte-identical text."""
    out = []
    src = feeder.bus_map[feeder.source_bus]
    vpu = ",".join(_fmt(v) for v in feeder.source_vpu)
    out.append("[source]")
    out.append(
        f"bus={feeder.source_bus} phases={src.phases} vpu={vpu} "
        f"sbase_kva={_fmt(feeder.sbase_kva)} vbase_kv={_fmt(feeder.vbase_kv)}"
    )
    out.append("")
    out.append("[bus]")
    for b in feeder.buses:
        out.append(f"{b.id} {b.phases} {_fmt(b.v_min)} {_fmt(b.v_max)}")
    out.append("")
    out.append("[line]")
    for ln in feeder.lines:
        zflat = " ".join(_fmt_complex(z) for row in ln.impedance for z in row)
        out.append(f"{ln.from_bus} {ln.to_bus} {ln.phases} {zflat}")
    if feeder.loads:
        out.append("")
        out.append("[load]")
        for ld in feeder.loads:
            out.append(
                f"{ld.bus} {ld.phase} {_fmt(ld.base_p_kw)} {_fmt(ld.base_q_kvar)} {ld.loadshape}"
            )
    if feeder.ders:
        out.append("")
        out.append("[der]")
        for d in feeder.ders:
            out.append(f"{d.bus} {d.phases} {_fmt(d.rated_kw)} {_fmt(d.q_setpoint_kvar)}")
    out.append("")
    return "\n".join(out)


def load_feeder(path) -> Feeder:
    with open(path, encoding="utf-8") as fh:
        return parse_feeder(fh.read())


def save_feeder(feeder: Feeder, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_feeder(feeder))
