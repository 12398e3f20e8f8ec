"""Command line interface: configuration, analysis runs and CSV output.

Configuration files are INI-style (``configparser``)::

    [geometry]      fill_level, optional start = r, z
    [segment N]     kind = line|arc, end = r, z, center = r, z (arcs), ccw
    [material]      E, nu, rho, h, yield_point
    [liquid]        rho_l, g
    [discretization] n, m_max, modes, degree, t_end, dt
    [load]          q0, tau, footprint = wetted|all|1,2,...
    [analysis]      class = a..e, bc = a|b|free, damping
    [probes]        name = r, z
    [output]        directory

Quantities may carry a unit suffix (``0.1 MPa``, ``14.2 us``); everything is
converted to SI when parsed.  Exit codes: 0 success, 2 missing input,
3 invalid configuration, 4 I/O failure, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import coupled_dynamics as cd
from . import elasticity as el
from . import fluid_solver as fs
from .discretization import InternalEdgeError
from .geometry import GeometryError, Meridian, build_meridian

log = logging.getLogger(__name__)

OUTPUT_ENV = "REVSHELL_HYDRO_OUTPUT"
POST_PULSE = 40.0
EXIT_OK, EXIT_MISSING, EXIT_SCHEMA, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4, 5

_UNITS = {
    "": 1.0, "pa": 1.0, "kpa": 1e3, "mpa": 1e6, "gpa": 1e9,
    "m": 1.0, "cm": 1e-2, "mm": 1e-3,
    "s": 1.0, "ms": 1e-3, "us": 1e-6,
    "kg/m3": 1.0, "kg/m^3": 1.0, "m/s2": 1.0, "m/s^2": 1.0,
}
_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z/^0-9]*)\s*$")


class ConfigError(ValueError):
    """Schema violation in a configuration file."""


@dataclass(frozen=True)
class LiquidSpec:
    rho_l: float
    g: float = cd.GRAVITY


@dataclass(frozen=True)
class LoadSpec:
    q0: float
    tau: float
    footprint: str = "wetted"
    segments: tuple | None = None
    below: float | None = None


@dataclass
class RunConfig:
    segments: list
    fill_level: float
    material: el.MaterialSpec
    liquid: LiquidSpec | None = None
    load: LoadSpec | None = None
    n: int = 32
    m_max: int = 8
    modes: int = 10
    degree: int = 16
    t_end: float = 0.02
    dt: float | None = None
    analysis: str = "e"
    bc: str = "b"
    damping: float = 0.0
    probes: list = field(default_factory=list)
    output: str = "output"
    start: tuple = (0.0, 0.0)
    _meridian: Meridian | None = field(default=None, repr=False, compare=False)

    @property
    def meridian(self) -> Meridian:
        if self._meridian is None:
            self._meridian = build_meridian(self.segments, self.fill_level, self.start)
        return self._meridian


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _quantity(section, key, text, lo=None, hi=None, lo_open=False, hi_open=False) -> float:
    m = _NUMBER.match(text)
    if not m:
        raise ConfigError(f"[{section}] {key}: cannot read a number from {text!r}")
    unit = m.group(2).lower()
    if unit not in _UNITS:
        raise ConfigError(f"[{section}] {key}: unknown unit {m.group(2)!r}")
    v = float(m.group(1)) * _UNITS[unit]
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigError(f"[{section}] {key} = {v}: must be {'>' if lo_open else '>='} {lo}")
    if hi is not None and (v > hi or (hi_open and v == hi)):
        raise ConfigError(f"[{section}] {key} = {v}: must be {'<' if hi_open else '<='} {hi}")
    return v


def _pair(section, key, text) -> tuple[float, float]:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if len(parts) != 2:
        raise ConfigError(f"[{section}] {key}: expected 'r, z', got {text!r}")
    return tuple(_quantity(section, key, p) for p in parts)


def _int(section, key, text, lo=None) -> int:
    try:
        v = int(text)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected an integer, got {text!r}") from None
    if lo is not None and v < lo:
        raise ConfigError(f"[{section}] {key} = {v}: must be >= {lo}")
    return v


_KNOWN = {
    "geometry": {"fill_level", "start"},
    "material": {"e", "nu", "rho", "h", "yield_point"},
    "liquid": {"rho_l", "g"},
    "discretization": {"n", "m_max", "modes", "degree", "t_end", "dt"},
    "load": {"q0", "tau", "footprint"},
    "analysis": {"class", "bc", "damping"},
    "output": {"directory"},
}


def parse_config(path) -> RunConfig:
    """Read and validate a configuration file.

    Raises FileNotFoundError for a missing file and ConfigError (with the
    offending section/field) for schema violations.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"configuration file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return config_from_parser(cp)
    except ConfigError as exc:
        line = _locate(path.read_text(encoding="utf-8"), str(exc))
        if line is None:
            raise
        raise ConfigError(f"{path}:{line}: {exc}") from None


def _locate(text: str, message: str) -> int | None:
    """Line number of the section (and key) a diagnostic refers to."""
    m = re.match(r"\[([^\]]+)\](?:\s+(\w+))?", message)
    if not m:
        return None
    section, key = m.group(1).strip().lower(), (m.group(2) or "").lower()
    current, found = None, None
    for no, raw in enumerate(text.splitlines(), start=1):
        ln = raw.strip()
        if ln.startswith("[") and ln.endswith("]"):
            current = ln[1:-1].strip().lower()
            if current == section and found is None:
                found = no
        elif current == section and key and "=" in ln:
            if ln.split("=", 1)[0].strip().lower() == key:
                return no
    return found


def config_from_parser(cp: configparser.ConfigParser) -> RunConfig:
    if not cp.has_section("geometry"):
        raise ConfigError("geometry block required")
    for sec in cp.sections():
        if sec in _KNOWN:
            extra = set(cp[sec]) - _KNOWN[sec]
            if extra:
                raise ConfigError(f"[{sec}]: unknown field(s) {sorted(extra)}")
        elif not (sec.startswith("segment") or sec == "probes"):
            raise ConfigError(f"unknown section [{sec}]")
    geo = cp["geometry"]
    if "fill_level" not in geo:
        raise ConfigError("[geometry] fill_level is required")
    fill = _quantity("geometry", "fill_level", geo["fill_level"], lo=0.0, lo_open=True)
    start = _pair("geometry", "start", geo["start"]) if "start" in geo else (0.0, 0.0)

    seg_secs = []
    for sec in cp.sections():
        if sec.startswith("segment"):
            m = re.fullmatch(r"segment\s+(\d+)", sec)
            if not m:
                raise ConfigError(f"bad section name [{sec}]; use [segment N]")
            seg_secs.append((int(m.group(1)), sec))
    if not seg_secs:
        raise ConfigError("at least one [segment N] block required")
    seg_secs.sort()
    if [k for k, _ in seg_secs] != list(range(1, len(seg_secs) + 1)):
        raise ConfigError("segments must be numbered 1..N without gaps")
    segments = []
    for _, sec in seg_secs:
        s = cp[sec]
        extra = set(s) - {"kind", "end", "center", "ccw"}
        if extra:
            raise ConfigError(f"[{sec}]: unknown field(s) {sorted(extra)}")
        kind = s.get("kind", "line").strip().lower()
        if kind not in ("line", "arc"):
            raise ConfigError(f"[{sec}] kind: expected line or arc, got {kind!r}")
        if "end" not in s:
            raise ConfigError(f"[{sec}] end is required")
        spec = {"kind": kind, "end": _pair(sec, "end", s["end"])}
        if kind == "arc":
            if "center" not in s:
                raise ConfigError(f"[{sec}] arcs need a center")
            spec["center"] = _pair(sec, "center", s["center"])
            try:
                spec["ccw"] = s.getboolean("ccw", fallback=True)
            except ValueError:
                raise ConfigError(f"[{sec}] ccw: expected true/false") from None
        segments.append(spec)

    if not cp.has_section("material"):
        raise ConfigError("material block required")
    mat = cp["material"]
    for key in ("e", "nu", "rho", "h"):
        if key not in mat:
            raise ConfigError(f"[material] {key} is required")
    try:
        material = el.MaterialSpec(
            E=_quantity("material", "E", mat["e"], lo=0.0, lo_open=True),
            nu=_quantity("material", "nu", mat["nu"], lo=0.0, hi=0.5, hi_open=True),
            rho=_quantity("material", "rho", mat["rho"], lo=0.0, lo_open=True),
            h=_quantity("material", "h", mat["h"], lo=0.0, lo_open=True),
            yield_point=(_quantity("material", "yield_point", mat["yield_point"], lo=0.0)
                         if "yield_point" in mat else None))
    except el.ShellError as exc:
        raise ConfigError(f"[material] {exc}") from None

    liquid = None
    if cp.has_section("liquid"):
        liq = cp["liquid"]
        if "rho_l" not in liq:
            raise ConfigError("[liquid] rho_l is required")
        liquid = LiquidSpec(_quantity("liquid", "rho_l", liq["rho_l"], lo=0.0),
                            _quantity("liquid", "g", liq.get("g", str(cd.GRAVITY)), lo=0.0))

    load = None
    if cp.has_section("load"):
        ld = cp["load"]
        for key in ("q0", "tau"):
            if key not in ld:
                raise ConfigError(f"[load] {key} is required")
        fp = ld.get("footprint", "wetted").strip().lower()
        segs, below = None, None
        if fp == "wetted":
            below = fill
        elif fp != "all":
            try:
                segs = tuple(int(v) for v in re.split(r"[,\s]+", fp) if v)
            except ValueError:
                raise ConfigError("[load] footprint: wetted, all or a list of segment numbers") from None
            if not segs or any(not 1 <= k <= len(segments) for k in segs):
                raise ConfigError(f"[load] footprint: segment numbers must lie in 1..{len(segments)}")
            fp = ",".join(str(k) for k in segs)
        load = LoadSpec(_quantity("load", "q0", ld["q0"]),
                        _quantity("load", "tau", ld["tau"], lo=0.0, lo_open=True), fp, segs, below)

    disc = cp["discretization"] if cp.has_section("discretization") else {}
    n = _int("discretization", "n", disc.get("n", "32"), lo=fs.MIN_NODES)
    m_max = _int("discretization", "m_max", disc.get("m_max", "8"), lo=0)
    modes = _int("discretization", "modes", disc.get("modes", "10"), lo=1)
    degree = _int("discretization", "degree", disc.get("degree", "16"), lo=3)
    t_end = _quantity("discretization", "t_end", disc.get("t_end", "0.02"), lo=0.0, lo_open=True)
    dt = (_quantity("discretization", "dt", disc["dt"], lo=0.0, lo_open=True)
          if "dt" in disc else None)

    an = cp["analysis"] if cp.has_section("analysis") else {}
    kind = an.get("class", "e").strip().lower()
    if kind not in cd.ANALYSIS_CLASSES:
        raise ConfigError(f"[analysis] class: expected one of a-e, got {kind!r}")
    bc = an.get("bc", "b").strip().lower()
    if bc not in el.BOUNDARY_CONDITIONS:
        raise ConfigError(f"[analysis] bc: expected one of {el.BOUNDARY_CONDITIONS}, got {bc!r}")
    damping = _quantity("analysis", "damping", an.get("damping", "0"), lo=0.0, hi=1.0, hi_open=True)
    if kind in ("c", "e") and liquid is None:
        raise ConfigError(f"[analysis] class {kind} needs a [liquid] block")
    if kind in ("a", "d", "e") and load is None:
        raise ConfigError(f"[analysis] class {kind} needs a [load] block")

    probes = []
    if cp.has_section("probes"):
        for name, text in cp["probes"].items():
            if not re.fullmatch(r"[A-Za-z0-9_\-]+", name):
                raise ConfigError(f"[probes] {name}: names may use letters, digits, _ and -")
            r, z = _pair("probes", name, text)
            probes.append(cd.Probe(name, r, z))

    out = cp["output"].get("directory", "output") if cp.has_section("output") else "output"
    cfg = RunConfig(segments, fill, material, liquid, load, n, m_max, modes, degree,
                    t_end, dt, kind, bc, damping, probes, out, start)
    try:
        cfg.meridian
    except GeometryError as exc:
        raise ConfigError(f"[geometry] {exc}") from None
    return cfg


def _fmt(v: float) -> str:
    return repr(float(v))


def dump_config(cfg: RunConfig) -> str:
    """Resolved configuration in SI units; re-parses to an equal RunConfig."""
    cp = configparser.ConfigParser()
    cp["geometry"] = {"fill_level": _fmt(cfg.fill_level),
                      "start": f"{_fmt(cfg.start[0])}, {_fmt(cfg.start[1])}"}
    for i, s in enumerate(cfg.segments, start=1):
        d = {"kind": s["kind"], "end": f"{_fmt(s['end'][0])}, {_fmt(s['end'][1])}"}
        if s["kind"] == "arc":
            d["center"] = f"{_fmt(s['center'][0])}, {_fmt(s['center'][1])}"
            d["ccw"] = "true" if s.get("ccw", True) else "false"
        cp[f"segment {i}"] = d
    m = cfg.material
    cp["material"] = {"E": _fmt(m.E), "nu": _fmt(m.nu), "rho": _fmt(m.rho), "h": _fmt(m.h)}
    if m.yield_point is not None:
        cp["material"]["yield_point"] = _fmt(m.yield_point)
    if cfg.liquid is not None:
        cp["liquid"] = {"rho_l": _fmt(cfg.liquid.rho_l), "g": _fmt(cfg.liquid.g)}
    if cfg.load is not None:
        cp["load"] = {"q0": _fmt(cfg.load.q0), "tau": _fmt(cfg.load.tau),
                      "footprint": cfg.load.footprint}
    disc = {"n": str(cfg.n), "m_max": str(cfg.m_max), "modes": str(cfg.modes),
            "degree": str(cfg.degree), "t_end": _fmt(cfg.t_end)}
    if cfg.dt is not None:
        disc["dt"] = _fmt(cfg.dt)
    cp["discretization"] = disc
    cp["analysis"] = {"class": cfg.analysis, "bc": cfg.bc, "damping": _fmt(cfg.damping)}
    if cfg.probes:
        cp["probes"] = {p.name: f"{_fmt(p.r)}, {_fmt(p.z)}" for p in cfg.probes}
    cp["output"] = {"directory": cfg.output}
    lines = ["# resolved configuration, SI units (m, Pa, kg/m^3, s)\n"]

    class _Buf(list):
        def write(self, s):
            self.append(s)

    buf = _Buf()
    cp.write(buf)
    return "".join(lines + buf)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

class OutputWriter:
    """Writes CSV and text files, remembering them for cleanup on failure."""

    def __init__(self, directory: Path):
        self.dir = Path(directory)
        self.written: list[Path] = []

    def prepare(self) -> None:
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
            probe = self.dir / ".write_test"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise OutputError(f"output directory {self.dir} not writable: {exc}") from None

    def text(self, name: str, content: str) -> Path:
        path = self.dir / name
        try:
            path.write_text(content, encoding="utf-8")
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from None
        self.written.append(path)
        return path

    def csv(self, name: str, header: list[str], rows, meta: list[str] = ()) -> Path:
        lines = [f"# {m}" for m in meta]
        lines.append(",".join(header))
        for row in rows:
            lines.append(",".join(_cell(v) for v in row))
        return self.text(name, "\n".join(lines) + "\n")

    def cleanup(self) -> None:
        for p in self.written:
            try:
                p.unlink()
            except OSError:
                pass
        self.written.clear()


class OutputError(OSError):
    pass


def _cell(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.12e}"


def _modes_rows(omega2):
    for k, w2 in enumerate(omega2, start=1):
        om = float(np.sqrt(max(w2, 0.0)))
        yield k, om, om / (2.0 * np.pi)


def output_directory(cfg: RunConfig, override: str | None = None) -> Path:
    if override:
        return Path(override)
    env = os.environ.get(OUTPUT_ENV)
    return Path(env) if env else Path(cfg.output)


def run(cfg: RunConfig, out_dir: Path | None = None) -> list[Path]:
    """Run the configured analysis class and write its output files."""
    writer = OutputWriter(out_dir or output_directory(cfg))
    writer.prepare()
    try:
        _run(cfg, writer)
    except BaseException:
        writer.cleanup()
        raise
    return list(writer.written)


def _run(cfg: RunConfig, writer: OutputWriter) -> None:
    t_total = time.perf_counter()
    writer.text("config_resolved.cfg", dump_config(cfg))
    outcome = cd.analysis_mode_dispatch(cfg)
    meta = [f"analysis class {cfg.analysis} ({outcome.kind})", "units: SI"]
    report = [f"analysis class: {cfg.analysis} ({outcome.kind})",
              f"boundary condition: {cfg.bc}",
              f"Ritz degree per segment: {cfg.degree}, generalized coordinates: "
              f"{outcome.shell.basis.size}"]
    if outcome.static is not None:
        rows = []
        for i, seg in enumerate(cfg.meridian.segments, start=1):
            tt = np.linspace(-1.0, 1.0, 21)
            u = outcome.shell.evaluate(outcome.static, i, tt, "u")
            w = outcome.shell.evaluate(outcome.static, i, tt, "w")
            for s, uu, ww in zip(seg.arclength(tt), u, w):
                rows.append((i, s, uu, ww))
        writer.csv("static_displacement.csv", ["segment", "s_m", "u_m", "w_m"], rows, meta)
    if outcome.dry:
        writer.csv("modes_dry.csv", ["index", "omega_rad_s", "frequency_hz"],
                   _modes_rows([m.omega2 for m in outcome.dry]), meta)
    if outcome.wet:
        writer.csv("modes_wet.csv", ["index", "omega_rad_s", "frequency_hz"],
                   _modes_rows([w for w, _ in outcome.wet]), meta)
    cs = outcome.coupled
    if cs is not None:
        d = cs.diagnostics
        report.append(f"retained modes K: {cs.size}")
        if "fluid_condition" in d:
            report.append(f"pressure system condition number (m=0, n={cfg.n}): "
                          f"{d['fluid_condition']:.6e}")
            report.append(f"added-mass relative asymmetry: {d['added_mass_asymmetry']:.3e}")
        if "load_participation" in d:
            report.append(f"load participation of retained modes: {d['load_participation']:.6f}")
    tr = outcome.transient
    if tr is not None:
        t = tr.times
        writer.csv("free_surface.csv", ["t_s", "f_m"], zip(t, tr.free_surface), meta)
        for name, w in tr.displacement.items():
            writer.csv(f"displacement_{name}.csv", ["t_s", "w_m"], zip(t, w), meta)
        for name, p in tr.pressure.items():
            writer.csv(f"pressure_{name}.csv", ["t_s", "p_pa"], zip(t, p), meta)
        e = tr.energy
        # the load is below 1e-17 q0 after 40 tau
        tail = e[t >= POST_PULSE * cfg.load.tau]
        if tail.size > 1 and tail.max() > 0:
            report.append(f"post-pulse energy drift: {(tail.max() - tail.min()) / tail.max():.3e}")
        report.append(f"time steps: {t.size - 1}, t_end = {t[-1]:.6e} s")
        missing = [p.name for p in cfg.probes if p.name not in tr.displacement]
        if missing:
            report.append("probes off the shell (pressure only): " + ", ".join(missing))
    timings = dict(outcome.timings)
    timings["total_s"] = time.perf_counter() - t_total
    report.append("timings (wall clock):")
    report += [f"  {k}: {v:.3f} s" for k, v in timings.items()]
    writer.text("report.txt", "\n".join(report) + "\n")


# ---------------------------------------------------------------------------
# convergence study
# ---------------------------------------------------------------------------

def _part_name(seg) -> str:
    if seg.kind == "arc":
        return "spherical"
    dr, dz = seg.end - seg.start
    if abs(dr) < 1e-12:
        return "cylindrical"
    if abs(dz) < 1e-12:
        return "plate"
    return "conical"


def _check_n_list(n_list) -> list[int]:
    ns = [int(v) for v in n_list]
    if len(ns) < 3:
        raise ConfigError("convergence study needs at least three grid sizes")
    if any(v < fs.MIN_NODES for v in ns):
        raise ConfigError(f"grid sizes must be >= {fs.MIN_NODES}")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("grid sizes must be strictly ascending")
    return ns


def convergence_study(cfg: RunConfig, n_list, out_dir: Path | None = None) -> dict:
    """Relative change of the wall pressure per part between n and 2n.

    The datum is the pressure generated by unit acceleration of the first
    dry mode.  Writes ``convergence.csv`` (deterministic) and
    ``convergence_timings.csv`` (wall clock).
    """
    ns = _check_n_list(n_list)
    writer = OutputWriter(out_dir or output_directory(cfg))
    writer.prepare()
    try:
        return _convergence(cfg, ns, writer)
    except BaseException:
        writer.cleanup()
        raise


def _convergence(cfg, ns, writer):
    mer = cfg.meridian
    shell = el.assemble_shell(mer, cfg.material, cfg.degree, cfg.bc)
    mode = el.dry_modes(shell, 1)[0]
    rho_l = cfg.liquid.rho_l if cfg.liquid else 1000.0
    # fixed evaluation points on each wetted wall piece
    xs = np.cos(np.pi * (np.arange(16) + 0.5) / 16)
    samples = {}
    for pc in mer.wetted:
        if pc.is_free_surface:
            continue
        pts = pc.segment.point(xs).T
        samples[pc.parent] = [tuple(p) for p in pts]
    needed = sorted(set(ns) | {2 * n for n in ns})
    values, timing = {}, {}
    for n in needed:
        t0 = time.perf_counter()
        sys_ = fs.assemble(mer, 0, n)
        field_ = fs.solve(sys_, fs.build_neumann_data(sys_, rho_l, mode))
        values[n] = {k: fs.evaluate_pressure_at(field_, v) for k, v in samples.items()}
        timing[n] = time.perf_counter() - t0
    parts = sorted(samples)
    names = [f"eps_{k}_{_part_name(mer.segment(k))}" for k in parts]
    rows, table = [], {}
    for n in ns:
        eps = []
        for k in parts:
            a, b = values[n][k], values[2 * n][k]
            eps.append(float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)))
        table[n] = eps
        rows.append([n] + eps)
    meta = ["relative change ||p_n - p_2n|| / ||p_2n|| of the wall pressure per part",
            "datum: unit acceleration of the first dry mode"]
    writer.csv("convergence.csv", ["n"] + names, rows, meta)
    writer.csv("convergence_timings.csv", ["n", "seconds"],
               [(n, timing[n]) for n in needed], ["wall-clock time of assembly and solve"])
    return {"parts": names, "eps": table, "timings": timing}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="revshell-hydro",
                                description="Hydroelastic analysis of liquid-filled shells of revolution")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the configured analysis class")
    r.add_argument("config")
    r.add_argument("-o", "--output", help="output directory (overrides config and environment)")
    c = sub.add_parser("converge", help="grid convergence study of the pressure")
    c.add_argument("config")
    c.add_argument("--n", default="8,16,32,64", help="comma separated grid sizes")
    c.add_argument("-o", "--output")
    m = sub.add_parser("modes", help="dry or wet natural frequencies")
    m.add_argument("config")
    g = m.add_mutually_exclusive_group(required=True)
    g.add_argument("--dry", action="store_true")
    g.add_argument("--wet", action="store_true")
    m.add_argument("-o", "--output")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    out = Path(args.output) if args.output else None
    try:
        if args.command == "run":
            files = run(cfg, out)
            print(f"wrote {len(files)} files to {files[0].parent}")
        elif args.command == "converge":
            try:
                ns = [int(v) for v in args.n.split(",") if v.strip()]
            except ValueError:
                raise ConfigError(f"--n: expected comma separated integers, got {args.n!r}") from None
            res = convergence_study(cfg, ns, out)
            for n, eps in res["eps"].items():
                print(n, " ".join(f"{e:.3e}" for e in eps))
        else:
            cfg.analysis = "c" if args.wet else "b"
            if args.wet and cfg.liquid is None:
                raise ConfigError("--wet needs a [liquid] block")
            files = run(cfg, out)
            print(f"wrote {len(files)} files to {files[0].parent}")
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (OutputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GeometryError, InternalEdgeError) as exc:
        print(f"error: invalid geometry: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (fs.FluidError, el.ShellError, cd.DynamicsError, np.linalg.LinAlgError,
            ValueError, ArithmeticError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
