"""Command-line interface.

Subcommands read samples from CSV (one object per row) or JSON-lines files
(one object per line), run a pipeline, and print a JSON result document on
standard output. Exit status is 0 on success, 2 when the variance of the
statistic is degenerate, 3 when the neighbour graph is disconnected and 1 on
any other error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import hashlib
import io
import itertools
import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dispersion import DispersionEstimate, dispersion
from .errors import DegenerateVarianceError, DisconnectedGraphError
from .geodesics import ellipse_parameters, gaussian_wasserstein_geodesic, isomap_geodesic
from .inference import CurvatureTestResult, curvature_test, region_boundary
from .intrinsic import intrinsic_curvature_test
from .metrics import GaussianBW, ObjectSample, Spd, SpdMetric, parse_space, space_label
from .simgen import (
    Hemisphere,
    Hyperboloid,
    Plane,
    RandomSpd,
    RotatedGaussians,
    SparseSphere,
    SphereCap,
    generate,
    monte_carlo_power,
)

__all__ = [
    "main",
    "run",
    "ResultDocument",
    "InputError",
    "read_objects",
    "parse_scenario",
    "parse_grid",
    "write_sample",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1
BOUNDARY_POINTS = 64

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DEGENERATE = 2
EXIT_DISCONNECTED = 3

SCENARIOS = {
    "hemisphere": Hemisphere,
    "hyperboloid": Hyperboloid,
    "plane": Plane,
    "sphere-cap": SphereCap,
    "random-spd": RandomSpd,
    "rotated-gaussians": RotatedGaussians,
    "sparse-sphere": SparseSphere,
}


class InputError(ValueError):
    """A malformed input file; the message names the line or record."""


# ---------------------------------------------------------------------------
# result document


@dataclass
class ResultDocument:
    command: dict
    inputs_digest: str | None = None
    dispersion: dict | None = None
    test: dict | None = None
    intrinsic: dict | None = None
    geodesic: list | None = None
    simulation: dict | None = None
    power: list | None = None
    error: dict | None = None
    warnings: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items() if v is not None}

    def to_json(self) -> str:
        # allow_nan=False turns any non-finite number into an error
        return json.dumps(self.to_dict(), indent=2, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "ResultDocument":
        return cls(**json.loads(text))


def _digest(paths) -> str:
    h = hashlib.sha256()
    for p in paths:
        h.update(Path(p).read_bytes())
    return h.hexdigest()


def _floats(a):
    return np.asarray(a, dtype=float).tolist()


def _dispersion_dict(est: DispersionEstimate) -> dict:
    out = {
        "n": est.n,
        "v_m": est.v_m,
        "v_f": est.v_f,
        "sigma": _floats(est.sigma),
        "clamped": list(est.clamped),
        "mean_converged": est.converged,
    }
    if est.mean_index is not None:
        out["mean_index"] = est.mean_index
    if est.mean is not None:
        out["mean"] = _floats(est.mean)
    return out


def _test_dict(res: CurvatureTestResult) -> dict:
    e = res.ellipse
    return {
        "rho_hat": res.rho_hat,
        "rho_prime_hat": res.rho_prime_hat,
        "sigma_hat": res.sigma_hat,
        "t_n": res.t_n,
        "p_value": res.p_value,
        "alternative": res.alternative.value,
        "alpha": res.alpha,
        "ci": list(res.ci),
        "reject": res.decision,
        "ellipse": {
            "center": _floats(e.center),
            "shape": _floats(e.shape),
            "radius2": e.radius2,
            "singular": e.singular,
            "boundary": _floats(region_boundary(e, BOUNDARY_POINTS)),
        },
    }


# ---------------------------------------------------------------------------
# input parsing


def _shape_objects(space, rows, source):
    shape = space.object_shape
    size = int(np.prod(shape))
    out = []
    for where, row in rows:
        if len(row) != size:
            raise InputError(f"{source}: {where}: expected {size} values, got {len(row)}")
        out.append(np.asarray(row, dtype=float).reshape(shape))
    if not out:
        raise InputError(f"{source}: no objects found")
    return np.stack(out)


def _read_csv(text, source):
    rows = []
    for lineno, record in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not record or not "".join(record).strip() or record[0].lstrip().startswith("#"):
            continue
        try:
            values = [float(v) for v in record]
        except ValueError:
            raise InputError(f"{source}: line {lineno}: cannot parse {record!r} as numbers") from None
        rows.append((f"line {lineno}", values))
    return rows


def _read_jsonl(text, source):
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"{source}: line {lineno}: invalid JSON ({exc.msg})") from None
        try:
            values = _record_values(rec)
        except (TypeError, ValueError, KeyError) as exc:
            raise InputError(f"{source}: line {lineno}: {exc}") from None
        rows.append((f"line {lineno}", values))
    return rows


def _record_values(rec):
    """Flatten a JSON record: a list, ``{"entries": [...], "dim": d}``,
    ``{"matrix": [[...]]}`` or ``{"values": [...]}``."""
    if isinstance(rec, list):
        arr = np.asarray(rec, dtype=float)
    elif isinstance(rec, dict):
        if "matrix" in rec:
            arr = np.asarray(rec["matrix"], dtype=float)
        elif "entries" in rec:
            arr = np.asarray(rec["entries"], dtype=float)
            if "dim" in rec and arr.size != int(rec["dim"]) ** 2:
                raise ValueError(f"'entries' has {arr.size} values but dim is {rec['dim']}")
        elif "values" in rec:
            arr = np.asarray(rec["values"], dtype=float)
        else:
            raise KeyError("record needs one of 'matrix', 'entries' or 'values'")
    else:
        raise TypeError(f"unsupported record type {type(rec).__name__}")
    return arr.ravel().tolist()


def read_objects(path, space, fmt: str | None = None) -> ObjectSample:
    """Read a sample of ``space`` from a CSV or JSON-lines file."""
    path = Path(path)
    if fmt is None:
        fmt = "jsonl" if path.suffix.lower() in (".jsonl", ".json", ".ndjson") else "csv"
    text = path.read_text()
    rows = _read_jsonl(text, path.name) if fmt == "jsonl" else _read_csv(text, path.name)
    return ObjectSample(space, _shape_objects(space, rows, path.name))


def write_sample(sample: ObjectSample, path) -> None:
    """Write vectors as CSV rows, everything else as JSON lines."""
    path = Path(path)
    objs = sample.objects
    with path.open("w", newline="") as fh:
        if objs.ndim == 2 and path.suffix.lower() not in (".jsonl", ".json"):
            writer = csv.writer(fh, lineterminator="\n")
            for row in objs:
                writer.writerow([repr(float(v)) for v in row])
        else:
            for obj in objs:
                if obj.ndim == 2:
                    rec = {"dim": obj.shape[0], "entries": obj.ravel().tolist()}
                else:
                    rec = {"values": obj.tolist()}
                fh.write(json.dumps(rec) + "\n")


def _read_keyvalue(path):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    text = Path(path).read_text()
    try:
        parser.read_string("[top]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise InputError(f"{Path(path).name}: {exc}") from None
    return dict(parser["top"])


def _convert(cls, key, raw, source):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    if key not in fields:
        raise InputError(f"{source}: unknown key {key!r} for {cls.__name__}")
    default = fields[key].default
    try:
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if isinstance(default, SpdMetric):
            return Spd(1, raw.strip()).metric
        if isinstance(default, str):
            return raw.strip()
        if isinstance(default, float):
            return float(raw)
        value = float(raw)
        if value != int(value):
            raise ValueError(raw)
        return int(value)
    except ValueError:
        raise InputError(f"{source}: bad value {raw!r} for {key!r}") from None


def parse_scenario(path, overrides=None):
    """Scenario from a ``key = value`` file whose ``design`` key names the design."""
    source = Path(path).name
    items = _read_keyvalue(path)
    items.update(overrides or {})
    design = items.pop("design", None)
    if design is None:
        raise InputError(f"{source}: missing 'design' key")
    cls = SCENARIOS.get(design.strip().lower())
    if cls is None:
        raise InputError(f"{source}: unknown design {design!r}; choose from {sorted(SCENARIOS)}")
    kwargs = {k: _convert(cls, k, str(v), source) for k, v in items.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{source}: {exc}") from None


def parse_grid(path, base):
    """Scenarios from ``key = v1, v2, ...`` lines, crossed in file order."""
    source = Path(path).name
    items = _read_keyvalue(path)
    keys = list(items)
    values = [[v.strip() for v in items[k].split(",") if v.strip()] for k in keys]
    specs = []
    for combo in itertools.product(*values):
        kwargs = {k: _convert(type(base), k, v, source) for k, v in zip(keys, combo)}
        try:
            specs.append(dataclasses.replace(base, **kwargs))
        except (TypeError, ValueError) as exc:
            raise InputError(f"{source}: {exc}") from None
    return specs


def _spec_dict(spec):
    out = {"design": next(k for k, v in SCENARIOS.items() if isinstance(spec, v))}
    for f in dataclasses.fields(spec):
        value = getattr(spec, f.name)
        out[f.name] = value.value if isinstance(value, SpdMetric) else value
    return out


# ---------------------------------------------------------------------------
# subcommands


def _load(args):
    space = parse_space(args.space)
    return read_objects(args.input, space, args.format), [args.input]


def _cmd_dispersion(args, doc):
    sample, inputs = _load(args)
    doc.inputs_digest = _digest(inputs)
    doc.dispersion = _dispersion_dict(dispersion(sample))


def _cmd_curvature_test(args, doc):
    sample, inputs = _load(args)
    doc.inputs_digest = _digest(inputs)
    est = dispersion(sample)
    doc.dispersion = _dispersion_dict(est)
    doc.test = _test_dict(curvature_test(est, args.alpha, args.alternative))


def _cmd_intrinsic_test(args, doc):
    sample, inputs = _load(args)
    doc.inputs_digest = _digest(inputs)
    res = intrinsic_curvature_test(sample, radius=args.radius, c=args.auto_radius_c,
                                   alpha=args.alpha, alternative=args.alternative)
    doc.intrinsic = {
        "radius": res.graph.radius,
        "auto_radius": args.radius is None,
        "c": args.auto_radius_c,
        "components": res.graph.component_count,
        "edges": res.graph.edge_count,
        "mean_index": res.mean_index,
    }
    doc.dispersion = _dispersion_dict(res.estimate)
    doc.test = _test_dict(res.test)


def _geodesic_record(t, obj):
    rec = {"t": t, "object": _floats(obj)}
    if obj.shape == (2, 2):
        rec["ellipse"] = ellipse_parameters(obj)
    return rec


def _cmd_geodesic(args, doc):
    sample, inputs = _load(args)
    doc.inputs_digest = _digest(inputs)
    if args.steps < 2:
        raise ValueError("--steps must be at least 2")
    for idx in (args.from_index, args.to_index):
        if not 0 <= idx < sample.n:
            raise ValueError(f"index {idx} out of range for {sample.n} objects")
    ts = [k / (args.steps - 1) for k in range(args.steps)]
    if args.mode == "wasserstein":
        if not (isinstance(sample.space, GaussianBW) or isinstance(sample.space, Spd)):
            raise ValueError("wasserstein mode needs covariance matrices")
        u, v = sample.objects[args.from_index], sample.objects[args.to_index]
        path = [gaussian_wasserstein_geodesic(u, v, t) for t in ts]
    else:
        path, _ = isomap_geodesic(sample, args.from_index, args.to_index, ts, q=args.q,
                                  bandwidth=args.bandwidth, radius=args.radius,
                                  c=args.auto_radius_c)
    doc.geodesic = [_geodesic_record(t, obj) for t, obj in zip(ts, path)]


def _cmd_simulate(args, doc):
    spec = parse_scenario(args.scenario, {"seed": str(args.seed)})
    sample = generate(spec)
    write_sample(sample, args.out)
    doc.inputs_digest = _digest([args.scenario])
    doc.simulation = {"scenario": _spec_dict(spec), "space": space_label(sample.space),
                      "n": sample.n, "out": str(args.out), "output_digest": _digest([args.out])}


def _cmd_power(args, doc):
    base = parse_scenario(args.scenario)
    specs = parse_grid(args.grid, base) if args.grid else [base]
    doc.inputs_digest = _digest([p for p in (args.scenario, args.grid) if p])
    table = monte_carlo_power(specs, runs=args.runs, alpha=args.alpha, mode=args.mode,
                              alternative=args.alternative, seed=args.seed,
                              c=args.auto_radius_c)
    doc.power = []
    for cell in table:
        row = {"scenario": _spec_dict(cell.spec), "runs": cell.runs,
               "rejections": cell.rejections, "degenerate": cell.degenerate}
        if cell.valid:
            row.update(rate=cell.rate, se=cell.se)
        doc.power.append(row)


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser():
    parser = argparse.ArgumentParser(prog="curvtest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("--space", required=True,
                       help="space label, e.g. euclidean:3, sphere:2, spd:3:affine-invariant")
        p.add_argument("--input", required=True, help="CSV or JSON-lines sample file")
        p.add_argument("--format", choices=("csv", "jsonl"), default=None,
                       help="input format (default: from the file extension)")

    def test_args(p):
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--alternative", choices=("two-sided", "positive", "negative"),
                       default="two-sided")

    def radius_args(p):
        group = p.add_mutually_exclusive_group()
        group.add_argument("--radius", type=float, default=None, help="fixed ball radius")
        group.add_argument("--auto-radius-c", type=float, default=1.0,
                           help="constant of the automatic radius rule (default 1)")

    p = sub.add_parser("dispersion", help="metric and Fréchet variance with covariance")
    data_args(p)
    p.set_defaults(func=_cmd_dispersion)

    p = sub.add_parser("curvature-test", help="curvature test in the ambient metric")
    data_args(p)
    test_args(p)
    p.set_defaults(func=_cmd_curvature_test)

    p = sub.add_parser("intrinsic-test", help="curvature test on graph geodesic distances")
    data_args(p)
    test_args(p)
    radius_args(p)
    p.set_defaults(func=_cmd_intrinsic_test)

    p = sub.add_parser("geodesic", help="reconstruct a geodesic between two objects")
    data_args(p)
    p.add_argument("--from", dest="from_index", type=int, required=True)
    p.add_argument("--to", dest="to_index", type=int, required=True)
    p.add_argument("--steps", type=int, default=5, help="number of points including endpoints")
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--q", type=int, default=1, help="embedding dimension")
    p.add_argument("--mode", choices=("isomap", "wasserstein"), default="isomap")
    radius_args(p)
    p.set_defaults(func=_cmd_geodesic)

    p = sub.add_parser("simulate", help="draw a sample from a scenario file")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("power", help="Monte Carlo rejection rates over a scenario grid")
    p.add_argument("--scenario", required=True)
    p.add_argument("--grid", default=None)
    p.add_argument("--runs", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("intrinsic", "ambient"), default="intrinsic")
    p.add_argument("--auto-radius-c", type=float, default=1.0)
    test_args(p)
    p.set_defaults(func=_cmd_power)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    """Run the command line and return the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors must not collide with the degenerate-variance status
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    doc = ResultDocument(command={"name": args.command, "argv": argv})
    status = EXIT_OK
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            args.func(args, doc)
        except DegenerateVarianceError as exc:
            status = EXIT_DEGENERATE
            doc.error = {"type": "degenerate-variance", "message": str(exc)}
        except DisconnectedGraphError as exc:
            status = EXIT_DISCONNECTED
            doc.error = {"type": "disconnected-graph", "message": str(exc),
                         "components": exc.components}
            if exc.required_radius is not None and math.isfinite(exc.required_radius):
                doc.error["required_radius"] = exc.required_radius
        except (OSError, ValueError, TypeError) as exc:
            status = EXIT_ERROR
            doc.error = {"type": type(exc).__name__, "message": str(exc)}
    doc.warnings = [str(w.message) for w in caught]
    try:
        text = doc.to_json()
    except ValueError as exc:
        status = EXIT_ERROR
        text = ResultDocument(command=doc.command, error={"type": "non-finite-result",
                                                          "message": str(exc)}).to_json()
    stdout.write(text + "\n")
    if doc.error:
        stderr.write(f"curvtest: error: {doc.error['message']}\n")
    return status


def main(argv=None) -> None:
    sys.exit(run(argv))
