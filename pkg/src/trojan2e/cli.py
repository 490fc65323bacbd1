"""Command-line interface.

Subcommands: ``units``, ``equilibrium``, ``scan``, ``integrate``, ``dmc`` and
``zvs-slice``.  Parameters are scaled units by default; ``--atomic-units``
reads laboratory atomic units and ``--dot`` a quantum-dot description.

Every option may also be given in a config file (``--config FILE``) of
``key = value`` lines, keys spelled like the long option without dashes
(``walker_target = 10000``).  Flags override the file; each override is
reported on stderr and recorded in the JSON provenance block.

Outputs go to ``--output`` (a path whose suffix is replaced per artifact) or
to ``$TROJAN2E_OUTPUT_DIR/<subcommand>.*`` (default: the current directory).
Files are written atomically.  Exit status: 0 success, 1 domain error (e.g.
no equilibrium found), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import tempfile
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import dmc as dmc_mod
from . import dynamics, equilibria as eqm, model, stability
from .errors import InvalidParameterError, Trojan2eError
from .units import DotParams, FieldParams, LabParams, ScaleFactors, dot_effective_units, to_scaled

__all__ = ["main", "parse_and_dispatch", "UsageError", "parse_range", "read_config",
           "OUTPUT_DIR_ENV"]

OUTPUT_DIR_ENV = "TROJAN2E_OUTPUT_DIR"
SUBCOMMANDS = ("units", "equilibrium", "scan", "integrate", "dmc", "zvs-slice")


class UsageError(Exception):
    """Malformed command line or config file (exit status 2)."""


# ---------------------------------------------------------------- parsing helpers

def _float(token: str) -> float:
    try:
        value = float(token)
    except (TypeError, ValueError):
        raise UsageError(f"malformed number {token!r}") from None
    if not math.isfinite(value):
        raise UsageError(f"non-finite number {token!r}")
    return value


def _int(token: str) -> int:
    try:
        return int(str(token).lstrip("+"))
    except ValueError:
        raise UsageError(f"malformed integer {token!r}") from None


def _branch(token: str) -> int:
    value = _int(token)
    if value not in (1, -1):
        raise UsageError(f"branch must be +1 or -1, got {token!r}")
    return value


def _hbar(token) -> "float | str":
    if str(token).strip().lower() == "physical":
        return "physical"
    value = _float(token)
    if value <= 0:
        raise UsageError(f"--hbar must be positive, got {token!r}")
    return value


def _bool(token) -> bool:
    if isinstance(token, bool):
        return token
    t = str(token).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"malformed boolean {token!r}")


def parse_range(token: str):
    """``start:stop:count`` (inclusive endpoints) or a single number.

    Returns ``(start, stop, count)``; a single number gives count 1.
    """
    parts = str(token).split(":")
    if len(parts) == 1:
        v = _float(parts[0])
        return v, v, 1
    if len(parts) != 3:
        raise UsageError(f"range must be start:stop:count, got {token!r}")
    start, stop, count = _float(parts[0]), _float(parts[1]), _int(parts[2])
    if count < 1:
        raise UsageError(f"range count must be >= 1 in {token!r}")
    if count == 1 and start != stop:
        raise UsageError(f"range {token!r} has count 1 but distinct endpoints")
    if count > 1 and not stop > start:
        raise UsageError(f"range {token!r} must increase")
    return start, stop, count


def _vector(n: int) -> Callable[[str], np.ndarray]:
    def conv(token: str) -> np.ndarray:
        parts = [p for p in str(token).replace(";", ",").split(",") if p.strip()]
        if len(parts) != n:
            raise UsageError(f"expected {n} comma-separated numbers, got {token!r}")
        return np.array([_float(p) for p in parts])
    return conv


def _planes(token: str) -> tuple:
    planes = tuple(p.strip() for p in str(token).split(",") if p.strip())
    for p in planes:
        if p not in dmc_mod.PLANES:
            raise UsageError(f"unknown plane {p!r} (choose from xy, xz, yz)")
    return planes


def _choice(*options):
    def conv(token: str) -> str:
        if token not in options:
            raise UsageError(f"invalid choice {token!r} (choose from {', '.join(options)})")
        return token
    return conv


# (name, converter, default, help); default None means "not set"
PARAM_OPTIONS = [
    ("omega", _float, None, "scaled CP frequency"),
    ("epsilon", _float, None, "scaled CP field strength"),
    ("branch", _branch, -1, "sign in omega + branch/2 (+1 or -1)"),
    ("dims", _int, None, "spatial dimension (default 3, or 2 with --dot)"),
    ("charge", _float, 2.0, "nuclear charge"),
    ("atomic_units", _bool, False, "read lab parameters in atomic units"),
    ("cp_frequency", _float, None, "CP angular frequency (a.u.)"),
    ("cp_strength", _float, None, "CP field amplitude (a.u.)"),
    ("cyclotron_frequency", _float, None, "signed cyclotron frequency (a.u.)"),
    ("dot", _bool, False, "read quantum-dot parameters"),
    ("b_field", _float, None, "magnetic field (T)"),
    ("effective_mass", _float, None, "effective mass (m_e)"),
    ("dielectric_constant", _float, None, "relative permittivity"),
    ("confinement_radius", _float, None, "confinement oscillator length (nm)"),
    ("impurity_charge", _float, None, "impurity charge (e)"),
    ("impurity_displacement", _float, None, "impurity distance from the dot center (nm)"),
]

COMMON_OPTIONS = [
    ("output", str, None, "output path; its suffix is replaced per artifact"),
    ("format", _choice("csv", "json"), None, "primary output format"),
    ("threads", _int, None, "cap on worker processes"),
]

SUB_OPTIONS = {
    "units": [],
    "equilibrium": [
        ("eq_class", _choice("I", "II", "IIIa", "IIIb", "all"), "I", "equilibrium family"),
        ("side", _choice("outward", "trojan", "both"), "outward", "Langmuir side (Type I)"),
        ("angle", _float, math.pi / 2, "seed angle (Type II, radians)"),
        ("stability", _bool, False, "attach a linear stability report"),
    ],
    "scan": [
        ("eq_class", _choice("I", "II", "IIIa", "IIIb"), "I", "equilibrium family"),
        ("side", _choice("outward", "trojan"), "outward", "Langmuir side (Type I)"),
        ("angle", _float, math.pi / 2, "seed angle (Type II, radians)"),
        ("tolerance", _float, 1e-8, "stability tolerance on real parts"),
    ],
    "integrate": [
        ("eq_class", _choice("I", "II", "IIIa", "IIIb"), "I", "start at this equilibrium"),
        ("side", _choice("outward", "trojan"), "outward", "Langmuir side (Type I)"),
        ("root", _int, 0, "cubic root index (Type I)"),
        ("angle", _float, math.pi / 2, "seed angle (Type II, radians)"),
        ("initial", None, None, "explicit start positions x1,y1[,z1],x2,y2[,z2]"),
        ("momenta", None, None, "explicit start momenta (default: zero velocity)"),
        ("perturb", _float, 0.0, "displacement added to every start coordinate"),
        ("periods", _float, None, "duration in rotation periods"),
        ("t_final", _float, None, "duration in scaled time"),
        ("stride", _float, None, "sampling interval"),
        ("rel_tol", _float, 1e-12, "relative tolerance"),
        ("abs_tol", _float, 1e-12, "absolute tolerance"),
        ("lab_frame", _bool, False, "write the trajectory in the lab frame"),
    ],
    "dmc": [
        ("walker_target", _int, 10_000, "target walker count"),
        ("time_step", _float, 0.2, "imaginary time step"),
        ("equilibration_steps", _int, 5000, "steps before accumulation"),
        ("accumulation_steps", _int, 10_000, "accumulation steps"),
        ("seed", _int, 0, "random seed"),
        ("box_hint", _float, None, "spatial extent for initialization"),
        ("planes", _planes, ("xz",), "comma-separated histogram planes"),
        ("bins", _int, 60, "histogram bins per axis"),
        ("record_every", _int, 5, "histogram every n-th generation"),
        ("guide_width", _float, None, "Gaussian guide width (off by default)"),
        ("symmetrize", _bool, True, "accumulate over both electron labelings"),
        ("hbar", _hbar, 1.0, "Planck constant in scaled units, or 'physical' "
                             "(|cyclotron|**(1/3) from --atomic-units/--dot)"),
    ],
    "zvs-slice": [
        ("plane", _choice("xy", "xz", "yz"), "xz", "slice plane for electron 1"),
        ("u_range", parse_range, None, "first plane coordinate start:stop:count"),
        ("v_range", parse_range, None, "second plane coordinate start:stop:count"),
        ("offset", _float, 0.0, "value of the out-of-plane coordinate"),
        ("partner", _choice("mirror", "fixed"), "mirror", "electron 2: z-mirror of electron 1, or fixed"),
        ("partner_position", None, None, "electron 2 position when partner = fixed"),
    ],
}

VECTOR_KEYS = {"initial", "momenta", "partner_position"}
BOOL_FLAGS = {"atomic_units", "dot", "stability", "lab_frame"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _option_table(sub: str):
    params = PARAM_OPTIONS
    if sub == "scan":
        # omega and epsilon are grids here
        params = [(n, parse_range, d, h + " grid start:stop:count") if n in ("omega", "epsilon")
                  else (n, c, d, h) for n, c, d, h in PARAM_OPTIONS]
    return params + COMMON_OPTIONS + SUB_OPTIONS[sub]


_NEGATIVE_VALUE = re.compile(r"^-[0-9.]")


def _join_negative_values(argv: list) -> list:
    """Attach values such as ``-5:5:11`` to their flag so argparse accepts them."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (tok.startswith("--") and "=" not in tok and i + 1 < len(argv)
                and _NEGATIVE_VALUE.match(argv[i + 1])):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def _build_parser() -> _Parser:
    parser = _Parser(prog="trojan2e", description="Two-electron Trojan states in rotating fields.")
    subs = parser.add_subparsers(dest="subcommand", parser_class=_Parser)
    for sub in SUBCOMMANDS:
        p = subs.add_parser(sub)
        p.add_argument("--config", help="key = value config file")
        for name, _, default, help_text in _option_table(sub):
            flag = "--" + name.replace("_", "-")
            if name in BOOL_FLAGS:
                p.add_argument(flag, dest=name, action="store_const", const="true",
                               default=None, help=help_text)
            else:
                p.add_argument(flag, dest=name, default=None, metavar="VALUE",
                               help=f"{help_text} (default: {default})" if default is not None
                               else help_text)
    return parser


def read_config(path) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc.strerror}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "plane_list":
            key = "planes"
        if key in out:
            raise UsageError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _resolve(sub: str, ns: argparse.Namespace):
    """Merge defaults, config file and flags; convert and validate every value."""
    table = {name: (conv, default) for name, conv, default, _ in _option_table(sub)}
    cfg = read_config(ns.config) if ns.config else {}
    for key in cfg:
        if key not in table:
            raise UsageError(f"unknown config key {key!r} for {sub}")
    values, overrides = {}, []
    for name, (conv, default) in table.items():
        flag = getattr(ns, name)
        raw = flag if flag is not None else cfg.get(name)
        if flag is not None and name in cfg and str(cfg[name]) != str(flag):
            overrides.append({"key": name, "config": cfg[name], "flag": flag})
        if raw is None:
            values[name] = default
            continue
        if name in VECTOR_KEYS:
            values[name] = str(raw)
            continue
        try:
            values[name] = conv(raw) if conv is not None else raw
        except UsageError as exc:
            raise UsageError(f"--{name.replace('_', '-')}: {exc}") from None
    return values, overrides


def _require(values: dict, *names):
    for n in names:
        if values.get(n) is None:
            raise UsageError(f"missing required option --{n.replace('_', '-')}")


def _field_params(values: dict):
    """Build FieldParams from the selected input mode; also return provenance."""
    if isinstance(values["omega"], tuple) and (values["atomic_units"] or values["dot"]):
        raise UsageError("scan grids are given in scaled units; drop --atomic-units/--dot")
    if values["atomic_units"] and values["dot"]:
        raise UsageError("--atomic-units and --dot are mutually exclusive")
    dims = values["dims"]
    if dims is not None and dims not in (2, 3):
        raise UsageError(f"--dims must be 2 or 3, got {dims}")
    prov = {}
    if values["atomic_units"]:
        _require(values, "cp_frequency", "cp_strength", "cyclotron_frequency")
        lab = LabParams(values["cp_frequency"], values["cp_strength"], values["cyclotron_frequency"])
        params = to_scaled(lab, dims=dims or 3, charge=values["charge"])
        prov["lab"] = {"cp_frequency": lab.cp_frequency, "cp_strength": lab.cp_strength,
                       "cyclotron_frequency": lab.cyclotron_frequency}
    elif values["dot"]:
        _require(values, "b_field", "effective_mass", "dielectric_constant",
                 "confinement_radius", "impurity_charge", "impurity_displacement")
        dot = DotParams(values["b_field"], values["effective_mass"], values["dielectric_constant"],
                        values["confinement_radius"], values["impurity_charge"],
                        values["impurity_displacement"])
        params, report = dot_effective_units(dot, dims=dims or 2)
        prov["dot"] = {k: getattr(dot, k) for k in dot.__dataclass_fields__}
        prov["dot_report"] = {k: v for k, v in report.__dict__.items() if k != "lab"}
        prov["lab"] = {"cp_frequency": report.lab.cp_frequency,
                       "cp_strength": report.lab.cp_strength,
                       "cyclotron_frequency": report.lab.cyclotron_frequency}
    elif isinstance(values["omega"], tuple) or isinstance(values["epsilon"], tuple):
        _require(values, "omega", "epsilon")
        # scan: validate the grid corners, keep branch/dims/charge
        for w in values["omega"][:2]:
            for e in values["epsilon"][:2]:
                FieldParams(w, e, values["branch"], dims or 3, values["charge"])
        params = FieldParams(values["omega"][0], values["epsilon"][0], values["branch"],
                             dims or 3, values["charge"])
        prov["params"] = {"omega": list(values["omega"]), "epsilon": list(values["epsilon"]),
                          "branch": params.branch, "dims": params.dims, "charge": params.charge}
        return params, prov
    else:
        _require(values, "omega", "epsilon")
        params = FieldParams(values["omega"], values["epsilon"], values["branch"],
                             dims or 3, values["charge"])
    prov["params"] = _params_record(params)
    return params, prov


def _params_record(p: FieldParams) -> dict:
    return {"omega": p.omega, "epsilon": p.epsilon, "branch": p.branch, "dims": p.dims,
            "charge": p.charge}


# ---------------------------------------------------------------- output

def _output_stem(sub: str, values: dict) -> Path:
    if values["output"]:
        out = Path(values["output"])
        return out.with_suffix("") if out.suffix in (".csv", ".json") else out
    base = Path(os.environ.get(OUTPUT_DIR_ENV) or ".")
    return base / sub.replace("-", "_")


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _num(x) -> str:
    return repr(float(x))


def _write_json(path: Path, payload: dict) -> Path:
    _write_atomic(path, json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def _write_csv(path: Path, rows: list[str]) -> Path:
    _write_atomic(path, "\n".join(rows) + "\n")
    return path


def _provenance(sub, values, prov, overrides) -> dict:
    options = {k: v for k, v in values.items() if k not in {n for n, *_ in PARAM_OPTIONS}}
    return {"subcommand": sub, **prov, "options": options, "overrides": overrides}


# ---------------------------------------------------------------- subcommands

CLASS_NAMES = {"I": eqm.TYPE_I, "II": eqm.TYPE_II, "IIIa": eqm.TYPE_IIIA, "IIIb": eqm.TYPE_IIIB}


def _equilibria_for(params: FieldParams, cls: str, side: str, angle: float):
    if cls == "I":
        sides = eqm.SIDES if side == "both" else (side,)
        return [e for s in sides for e in eqm.langmuir_equilibria(params, s)]
    if cls == "II":
        return [eqm.type2_config(params, angle)]
    return eqm.collinear_equilibria(params, CLASS_NAMES[cls])


def _cmd_units(values, params, prov):
    scale = None
    if "lab" in prov:
        f = ScaleFactors(prov["lab"]["cyclotron_frequency"])
        scale = {"time": f.time, "length": f.length, "momentum": f.momentum,
                 "energy": f.energy, "field": f.field}
    payload = {"scale_factors_au": scale, "angular": params.angular,
               "centrifugal": params.centrifugal}
    summary = f"omega={params.omega:.6g} epsilon={params.epsilon:.6g} branch={params.branch:+d}"
    return payload, None, summary


def _cmd_equilibrium(values, params, prov):
    cls = values["eq_class"]
    classes = ["I", "II", "IIIa", "IIIb"] if cls == "all" else [cls]
    if params.dims == 2:
        classes = [c for c in classes if c != "I"] if cls == "all" else classes
    records, roots = [], {}
    for c in classes:
        try:
            found = _equilibria_for(params, c, values["side"], values["angle"])
        except eqm.EquilibriumNotFoundError:
            if cls != "all":
                raise
            found = []
        if c == "I":
            sides = eqm.SIDES if values["side"] == "both" else (values["side"],)
            roots = {s: eqm.langmuir_cubic(params, s) for s in sides}
        for e in found:
            rec = e.to_record()
            if values["stability"]:
                rec["stability"] = stability.equilibrium_stability(e).to_dict()
            records.append(rec)
    if not records:
        raise eqm.EquilibriumNotFoundError(f"no {cls} equilibrium found for {params}")
    payload = {"equilibria": records, "roots": roots}
    rows = None
    if values["format"] == "csv":
        axes = "xyz"[: params.dims]
        rows = ["class,side,side_length,residual," + ",".join(
            f"{a}{i}" for i in (1, 2) for a in axes)]
        for r in records:
            pos = ",".join(_num(v) for v in np.ravel(r["positions"]))
            sl = "" if r["side_length"] is None else _num(r["side_length"])
            rows.append(f"{r['class']},{r['side'] or ''},{sl},{_num(r['residual'])},{pos}")
    return payload, rows, f"{len(records)} equilibria"


def _cmd_scan(values, params, prov):
    o, e = values["omega"], values["epsilon"]
    if o[2] != e[2]:
        resolution = (o[2], e[2])
    else:
        resolution = o[2]
    smap = stability.scan((o[0], o[1]), (e[0], e[1]), resolution, params.branch,
                          CLASS_NAMES[values["eq_class"]], params.dims, side=values["side"],
                          charge=params.charge, angle=values["angle"],
                          tolerance=values["tolerance"], workers=values["threads"])
    summary = smap.summary()
    rows = smap.csv_rows()
    return {"summary": summary}, rows, (f"{summary['cells']} cells, "
                                         f"{summary['cells_stable']} with a stable equilibrium")


def _cmd_integrate(values, params, prov):
    eq = None
    if values["initial"] is not None:
        q = _vector(2 * params.dims)(values["initial"]).reshape(2, params.dims)
        if values["momenta"] is not None:
            p = _vector(2 * params.dims)(values["momenta"]).reshape(2, params.dims)
        else:
            p = model.zero_velocity_momenta(q, params)
    else:
        found = _equilibria_for(params, values["eq_class"], values["side"], values["angle"])
        idx = values["root"]
        if not 0 <= idx < len(found):
            raise eqm.EquilibriumNotFoundError(
                f"equilibrium index {idx} out of range: {len(found)} found "
                f"(valid indices 0..{len(found) - 1})" if found else
                "no equilibrium of the requested class at these parameters")
        eq = found[idx]
        q, p = eq.config.copy(), eq.momenta.copy()
    q = q + values["perturb"]
    if values["periods"] is not None and values["t_final"] is not None:
        raise UsageError("give --periods or --t-final, not both")
    if values["t_final"] is not None:
        t_final = values["t_final"]
    else:
        t_final = (values["periods"] if values["periods"] is not None else 10.0) \
            * dynamics.rotation_period(params)
    traj = dynamics.integrate(model.PhaseState(q, p), params, t_final,
                              rel_tol=values["rel_tol"], abs_tol=values["abs_tol"],
                              stride=values["stride"])
    out = dynamics.to_lab_frame(traj, params.omega) if values["lab_frame"] else traj
    payload = {"frame": out.frame, "t_final": t_final, "samples": len(out),
               "energy_drift": traj.energy_drift, "stop_reason": traj.stop_reason,
               "initial": {"positions": q, "momenta": p},
               "equilibrium": eq.to_record() if eq is not None else None,
               "solver": traj.meta}
    if eq is not None:
        payload["max_deviation"] = float(np.max(traj.deviation(eq.config)))
    return payload, out.csv_rows(), (f"{len(out)} samples to t={t_final:.6g}, "
                                     f"energy drift {traj.energy_drift:.2e}")


def _resolve_hbar(values, prov) -> float:
    if values["hbar"] != "physical":
        return values["hbar"]
    if "lab" not in prov:
        raise UsageError("--hbar physical needs --atomic-units or --dot")
    return ScaleFactors(prov["lab"]["cyclotron_frequency"]).hbar


def _cmd_dmc(values, params, prov):
    hbar = _resolve_hbar(values, prov)
    cfg = dmc_mod.DmcConfig(
        walker_target=values["walker_target"], time_step=values["time_step"],
        equilibration_steps=values["equilibration_steps"],
        accumulation_steps=values["accumulation_steps"], seed=values["seed"],
        box_hint=values["box_hint"], planes=values["planes"], bins=values["bins"],
        record_every=values["record_every"], guide_width=values["guide_width"],
        symmetrize=values["symmetrize"], hbar=hbar)
    res = dmc_mod.run_dmc(params, cfg)
    extra = {}
    for plane, (h1, h2) in res.density.items():
        rows = ["bin_x,bin_y,count_e1,count_e2"]
        for i, x in enumerate(h1.centers_x):
            for j, y in enumerate(h1.centers_y):
                rows.append(",".join(_num(v) for v in (x, y, h1.counts[i, j], h2.counts[i, j])))
        extra[plane] = rows
    payload = {"energy": res.energy, "error": res.energy_error, "hbar": hbar,
               "growth_energy": res.growth_energy,
               "lobe_centers": res.lobe_centers, "lobe_centroids": res.lobe_centroids,
               "lobe_fractions": res.lobe_fractions,
               "lobe_fraction_errors": res.lobe_fraction_errors,
               "matched_cubic_root": res.matched_root, "diagnostics": res.diagnostics}
    summary = f"E = {res.energy:.6f} +- {res.energy_error:.2g}"
    if res.matched_root:
        summary += f", lobes match root {res.matched_root['root_index']}"
    return payload, extra, summary


def _cmd_zvs_slice(values, params, prov):
    _require(values, "u_range", "v_range")
    plane = values["plane"]
    i, j = dmc_mod.PLANES[plane]
    if max(i, j) >= params.dims:
        raise UsageError(f"plane {plane} needs dims = 3")
    fixed = None
    if values["partner"] == "fixed":
        _require(values, "partner_position")
        fixed = _vector(params.dims)(values["partner_position"])
    us = stability.grid(*values["u_range"])
    vs = stability.grid(*values["v_range"])
    other = ({0, 1, 2} - {i, j}).pop() if params.dims == 3 else None
    rows = [f"{'xyz'[i]},{'xyz'[j]},zvs"]
    lowest = math.inf
    for u in us:
        for v in vs:
            q1 = np.zeros(params.dims)
            q1[i], q1[j] = u, v
            if other is not None:
                q1[other] = values["offset"]
            if fixed is None:
                q2 = q1.copy()
                if params.dims == 3:
                    q2[2] = -q2[2]
                else:
                    q2[1] = -q2[1]
            else:
                q2 = fixed
            try:
                val = model.zvs(np.array([q1, q2]), params)
                lowest = min(lowest, val)
                rows.append(f"{_num(u)},{_num(v)},{_num(val)}")
            except Trojan2eError:
                rows.append(f"{_num(u)},{_num(v)},")
    payload = {"plane": plane, "partner": values["partner"], "points": len(us) * len(vs),
               "min_value": lowest}
    return payload, rows, f"{len(us) * len(vs)} points"


HANDLERS = {
    "units": _cmd_units,
    "equilibrium": _cmd_equilibrium,
    "scan": _cmd_scan,
    "integrate": _cmd_integrate,
    "dmc": _cmd_dmc,
    "zvs-slice": _cmd_zvs_slice,
}
DEFAULT_FORMAT = {"units": "json", "equilibrium": "json", "scan": "csv", "integrate": "csv",
                  "dmc": "csv", "zvs-slice": "csv"}


def parse_and_dispatch(argv, stdout=None, stderr=None) -> int:
    """Run one subcommand; return the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        ns = _build_parser().parse_args(_join_negative_values(list(argv)))
        if ns.subcommand is None:
            raise UsageError(f"choose a subcommand: {', '.join(SUBCOMMANDS)}")
        sub = ns.subcommand
        values, overrides = _resolve(sub, ns)
        for o in overrides:
            print(f"note: --{o['key'].replace('_', '-')}={o['flag']} overrides config value "
                  f"{o['config']!r}", file=stderr)
        if values["threads"] is not None and values["threads"] < 1:
            raise UsageError("--threads must be >= 1")
        if values["format"] is None:
            values["format"] = DEFAULT_FORMAT[sub]
        try:
            params, prov = _field_params(values)
        except InvalidParameterError as exc:
            raise UsageError(str(exc)) from None
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return 2

    try:
        payload, rows, summary = HANDLERS[sub](values, params, prov)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return 2
    except InvalidParameterError as exc:
        print(f"usage error: {exc}", file=stderr)
        return 2
    except Trojan2eError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return 1

    stem = _output_stem(sub, values)
    payload = {**_provenance(sub, values, prov, overrides), "result": payload}
    written = []
    if isinstance(rows, dict):
        for plane, plane_rows in rows.items():
            written.append(_write_csv(stem.with_name(f"{stem.name}_{plane}.csv"), plane_rows))
        written.append(_write_json(stem.with_suffix(".json"), payload))
    elif rows is not None and values["format"] == "csv":
        written.append(_write_csv(stem.with_suffix(".csv"), rows))
        written.append(_write_json(stem.with_suffix(".json"), payload))
    else:
        written.append(_write_json(stem.with_suffix(".json"), payload))
    print(f"{sub}: {summary} -> {', '.join(str(w) for w in written)}", file=stdout)
    return 0


def main(argv: Optional[list] = None) -> int:
    return parse_and_dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
