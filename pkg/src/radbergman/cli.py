"""radbergman command line.

Usage:
    radbergman classify --weight log_perturbed:p=-1,q=-2
    radbergman criteria --omega standard:a=1 --nu standard:a=0
    radbergman norm --omega standard:a=0 --nu log_perturbed:p=-1,q=-2 --kind both
    radbergman kernel --weight standard:a=1 --z 0.3+0.2j --zeta 0.5-0.1j
    radbergman szego --weight standard:a=0 --M 8
    radbergman expcheck --mode drho
    radbergman matrix --depth 12 --threads 4

Every run writes report.json, one CSV per trace, manifest.json and, with
--plot, SVG line plots into --out.  Options may also come from a TOML or
JSON file given by --config; command-line flags take precedence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import criteria as cr
from . import expweights as ew
from .classify import classify
from .kernel import KernelConvergenceError, KernelEvaluator
from .projection import PolarMesh, szego_agreement_check
from .quad import QuadratureError
from .report import CriterionReport, _jsonable
from .weights import MomentUnderflow, TailOf, WeightError, weight_from_config

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_INCONSISTENT, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


def load_config(path) -> dict:
    path = Path(path)
    text = path.read_text()
    try:
        if path.suffix.lower() == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def parse_weight_arg(text: str) -> dict:
    """``family:key=value,...`` or inline JSON into a weight config table."""
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"weight JSON: {exc.msg}") from None
    family, _, rest = text.partition(":")
    cfg = {"family": family.strip()}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ConfigError(f"weight field {item!r}: expected key=value")
        try:
            cfg[key.strip()] = float(val)
        except ValueError:
            cfg[key.strip()] = val.strip()
    return cfg


def _weight(cfg, key, required=True):
    if key not in cfg:
        if required:
            raise ConfigError(f"missing weight '{key}'")
        return None
    try:
        return weight_from_config(cfg[key], key)
    except WeightError as exc:
        raise ConfigError(str(exc)) from None


def _complex(v, where):
    try:
        if isinstance(v, (list, tuple)):
            return complex(float(v[0]), float(v[1]))
        return complex(str(v).replace(" ", ""))
    except (ValueError, IndexError, TypeError):
        raise ConfigError(f"{where}: cannot read {v!r} as a complex number") from None


def effective_config(args) -> dict:
    cfg = load_config(args.config) if args.config else {}
    cfg["command"] = args.command
    for key in ("depth", "tol", "threads", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key in ("weight", "omega", "nu", "v"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = parse_weight_arg(val)
    for key in ("kind", "mode", "method", "M", "z", "zeta", "alpha", "beta", "sigma", "gamma",
                "t", "n_pairs", "alpha_tilde"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def config_hash(cfg) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, complex):
        return repr(v)
    return str(v)


def write_csv(path: Path, rows) -> None:
    rows = list(rows)
    buf = io.StringIO()
    if rows:
        fields = list(dict.fromkeys(k for row in rows for k in row))
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})
    path.write_text(buf.getvalue())


def svg_line_plot(x, y, title="", xlabel="", ylabel="", width=480, height=320) -> str:
    """A bare SVG polyline plot; non-finite points are dropped."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    pad = 48
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<text x="{width / 2}" y="18" text-anchor="middle" font-size="13">{title}</text>']
    if x.size:
        x0, x1 = float(x.min()), float(x.max())
        y0, y1 = float(y.min()), float(y.max())
        x1 = x1 if x1 > x0 else x0 + 1
        y1 = y1 if y1 > y0 else y0 + 1
        px = pad + (x - x0) / (x1 - x0) * (width - 2 * pad)
        py = height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        parts += [
            f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
            f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
            f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{pts}"/>',
            f'<text x="{pad}" y="{height - pad + 16}" font-size="10">{x0:.3g}</text>',
            f'<text x="{width - pad}" y="{height - pad + 16}" font-size="10" text-anchor="end">{x1:.3g}</text>',
            f'<text x="{pad - 4}" y="{height - pad}" font-size="10" text-anchor="end">{y0:.3g}</text>',
            f'<text x="{pad - 4}" y="{pad + 4}" font-size="10" text-anchor="end">{y1:.3g}</text>',
        ]
    parts += [f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" font-size="11">{xlabel}</text>',
              f'<text x="12" y="{height / 2}" font-size="11" transform="rotate(-90 12 {height / 2})" '
              f'text-anchor="middle">{ylabel}</text>', "</svg>"]
    return "\n".join(parts) + "\n"


class Output:
    """Collects artifacts for one run and writes them in a fixed order."""

    def __init__(self, out_dir, plot: bool):
        self.dir = Path(out_dir)
        self.plot = plot
        self.csvs = {}
        self.svgs = {}

    def add_report(self, name: str, rep: CriterionReport):
        self.csvs[name] = list(rep.csv_rows())
        if self.plot:
            self.svgs[name] = svg_line_plot(rep.L, rep.log_trace, f"{rep.criterion}: {rep.verdict}",
                                            "L", "log trace")

    def write(self, cfg, results, status):
        self.dir.mkdir(parents=True, exist_ok=True)
        files = []
        for name, rows in sorted(self.csvs.items()):
            write_csv(self.dir / f"{name}.csv", rows)
            files.append(f"{name}.csv")
        for name, svg in sorted(self.svgs.items()):
            (self.dir / f"{name}.svg").write_text(svg)
            files.append(f"{name}.svg")
        report = {"schema_version": SCHEMA_VERSION, "command": cfg["command"],
                  "status": status, "config": cfg, "results": _jsonable(results)}
        (self.dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "command": cfg["command"],
            "config_sha256": config_hash(cfg),
            "tolerances": {"tol": cfg.get("tol"), "depth": cfg.get("depth")},
            "seed": cfg.get("seed"),
            "versions": {"radbergman": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "files": ["report.json"] + files,
            "exit_status": status,
        }
        (self.dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands; each returns (results, exit status)
# ---------------------------------------------------------------------------


def run_classify(cfg, out: Output):
    w = _weight(cfg, "weight")
    rep = classify(w, depth=int(cfg.get("depth", 40)))
    out.csvs["classify"] = list(rep.csv_rows())
    return rep.to_dict(), EXIT_OK


def run_criteria(cfg, out: Output):
    om, nu = _weight(cfg, "omega"), _weight(cfg, "nu")
    depth = int(cfg.get("depth", 40))
    reps = {"moment": cr.moment_criterion_scan(om, nu),
            "tail": cr.tail_criterion_scan(om, nu, depth),
            "necessary_moment": cr.necessary_moment_condition(om, nu)}
    for k, r in reps.items():
        out.add_report(f"criteria_{k}", r)
    return {k: r.to_dict() for k, r in reps.items()}, EXIT_OK


def run_norm(cfg, out: Output):
    om = _weight(cfg, "omega")
    v = _weight(cfg, "v", required=False)
    if v is None:
        v = TailOf(base=_weight(cfg, "nu"))
    depth = int(cfg.get("depth", 12))
    kind = cfg.get("kind", "hinf")
    if kind not in ("hinf", "bloch", "both"):
        raise ConfigError(f"kind: expected hinf, bloch or both, got {kind!r}")
    reps = {}
    if kind in ("hinf", "both"):
        reps["hinf"] = cr.hinf_norm_scan(om, v, depth)
    if kind in ("bloch", "both"):
        reps["bloch"] = cr.bloch_norm_scan(om, v, depth)
    for k, r in reps.items():
        out.add_report(f"norm_{k}", r)
    return {k: r.to_dict() for k, r in reps.items()}, EXIT_OK


def run_kernel(cfg, out: Output):
    w = _weight(cfg, "weight")
    tol = float(cfg.get("tol", 1e-12))
    pairs = cfg.get("pairs")
    if pairs is None:
        if "z" not in cfg or "zeta" not in cfg:
            raise ConfigError("kernel needs z and zeta, or a pairs list")
        pairs = [[cfg["z"], cfg["zeta"]]]
    K = KernelEvaluator(w)
    rows = []
    for i, pair in enumerate(pairs):
        if len(pair) != 2:
            raise ConfigError(f"pairs[{i}]: expected [z, zeta]")
        z, zeta = _complex(pair[0], f"pairs[{i}][0]"), _complex(pair[1], f"pairs[{i}][1]")
        val = K.eval(z, zeta, tol)
        der = K.deriv(z, zeta, tol)
        rows.append({"z": z, "zeta": zeta, "re": val.value.real, "im": val.value.imag,
                     "error": val.error, "n_terms": val.n_terms,
                     "d_re": der.value.real, "d_im": der.value.imag, "d_error": der.error})
    out.csvs["kernel"] = rows
    return {"weight": w.to_config(), "values": [
        {k: (str(v) if isinstance(v, complex) else v) for k, v in r.items()} for r in rows]}, EXIT_OK


def run_szego(cfg, out: Output):
    w = _weight(cfg, "weight")
    M = int(cfg.get("M", 8))
    method = cfg.get("method", "harmonic")
    if method not in ("harmonic", "sampled"):
        raise ConfigError(f"method: expected harmonic or sampled, got {method!r}")
    chk = szego_agreement_check(w, M=M, method=method,
                                mesh=PolarMesh(n_theta=max(64, 1 << math.ceil(math.log2(2 * M + 2)))))
    rows = [{"mode": int(m), "z": complex(z), "deviation": float(chk.deviation[i, j])}
            for i, m in enumerate(chk.modes) for j, z in enumerate(chk.z_grid)]
    out.csvs["szego"] = rows
    tol = float(cfg.get("tol", 1e-10))
    return {"weight": w.to_config(), "M": M, "method": method,
            "max_deviation": chk.max_deviation, "tol": tol,
            "within_tol": chk.max_deviation <= tol}, EXIT_OK


def _class_e(cfg):
    keys = ("alpha", "beta", "ell", "kind", "sigma", "rho_exponent")
    table = cfg.get("family", {})
    try:
        return ew.ClassESpec(**{k: table[k] for k in keys if k in table})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"family: {exc}") from None


def run_expcheck(cfg, out: Output):
    mode = cfg.get("mode", "wzero-check")
    spec = _class_e(cfg)
    depth = int(cfg.get("depth", 12))
    seed = int(cfg.get("seed", 0))
    if mode == "wzero-check":
        chk = ew.wzero_check(spec)
        out.csvs["wzero"] = [{"r": r, "ratio": q} for r, q in zip(chk.r, chk.ratio)]
        return chk.to_dict(), EXIT_OK
    if mode == "drho":
        chk = ew.drho_consistency_check(spec, n_pairs=int(cfg.get("n_pairs", 100)), seed=seed)
        out.csvs["drho"] = [{"z": complex(p[0]), "zeta": complex(p[1]), "d": d, "d_coarse": c,
                             "segment_bound": b}
                            for p, d, c, b in zip(chk.pairs, chk.values, chk.coarse, chk.bounds)]
        return chk.to_dict(), EXIT_OK
    if mode == "kernel-bound":
        fit = ew.kernel_bound_fit(spec, n_pairs=int(cfg.get("n_pairs", 1000)), seed=seed)
        out.csvs["kernel_bound"] = [{"d_rho": d, "log_ratio": l} for d, l in zip(fit.d, fit.log_ratio)]
        return fit.to_dict(), EXIT_OK
    if mode == "exp-family":
        nu = _weight(cfg, "nu", required=False)
        rep = ew.exp_family_scan(spec, nu, int(cfg.get("t", 0)), float(cfg.get("sigma", 0.0)),
                                 depth)
        out.add_report("exp_family", rep)
        return rep.to_dict(), EXIT_OK
    if mode == "mismatch":
        rep = ew.mismatch_scan(float(cfg.get("alpha_tilde", 2.5)), spec, depth)
        out.add_report("mismatch", rep)
        return rep.to_dict(), EXIT_OK
    if mode == "corrected-power":
        rep = ew.corrected_power_family_scan(
            float(cfg.get("alpha", 1.0)), float(cfg.get("beta", 1.0)),
            float(cfg.get("sigma", 0.0)), float(cfg.get("gamma", 0.0)), depth)
        out.add_report("corrected_power", rep)
        return rep.to_dict(), EXIT_OK
    raise ConfigError(f"mode: unknown mode {mode!r} "
                      "(wzero-check, drho, kernel-bound, exp-family, mismatch, corrected-power)")


def run_matrix(cfg, out: Output):
    if "pairs" in cfg:
        pairs = []
        for i, p in enumerate(cfg["pairs"]):
            try:
                pairs.append((weight_from_config(p["omega"], f"pairs[{i}].omega"),
                              weight_from_config(p["nu"], f"pairs[{i}].nu")))
            except KeyError as exc:
                raise ConfigError(f"pairs[{i}]: missing {exc}") from None
            except WeightError as exc:
                raise ConfigError(str(exc)) from None
    else:
        pairs = cr.default_pairs()
    depth = int(cfg.get("depth", 12))
    threads = max(1, int(cfg.get("threads", 1)))
    with ThreadPoolExecutor(threads) as pool:
        rows = list(pool.map(lambda p: cr.equivalence_matrix([p], depth)[0], pairs))
    table = []
    for i, row in enumerate(rows):
        for k, rep in row.scans.items():
            out.add_report(f"matrix_{i}_{k}", rep)
        table.append({"pair": i, "omega": row.omega.label(), "nu": row.nu.label(),
                      **{k: s.verdict for k, s in row.scans.items()},
                      "inconsistencies": len(row.inconsistencies)})
    out.csvs["matrix"] = table
    bad = any(r.inconsistencies for r in rows)
    return {"rows": [r.to_dict() for r in rows]}, EXIT_INCONSISTENT if bad else EXIT_OK


COMMANDS = {"classify": run_classify, "criteria": run_criteria, "norm": run_norm,
            "kernel": run_kernel, "szego": run_szego, "expcheck": run_expcheck,
            "matrix": run_matrix}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON experiment config")
    common.add_argument("--out", default="radbergman-out", help="output directory")
    common.add_argument("--depth", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--threads", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--plot", action="store_true", help="write SVG plots of traces")

    p = argparse.ArgumentParser(prog="radbergman", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("classify", parents=[common], help="doubling-class verdicts for a weight")
    s.add_argument("--weight")
    s = sub.add_parser("criteria", parents=[common], help="moment and tail criteria for a pair")
    s.add_argument("--omega")
    s.add_argument("--nu")
    s = sub.add_parser("norm", parents=[common], help="H-infinity / Bloch norm scans")
    s.add_argument("--omega")
    s.add_argument("--nu")
    s.add_argument("--v", help="growth weight; defaults to the tail of --nu")
    s.add_argument("--kind", choices=["hinf", "bloch", "both"])
    s = sub.add_parser("kernel", parents=[common], help="kernel and derivative values")
    s.add_argument("--weight")
    s.add_argument("--z")
    s.add_argument("--zeta")
    s = sub.add_parser("szego", parents=[common], help="agreement with the Szego projection")
    s.add_argument("--weight")
    s.add_argument("--M", type=int)
    s.add_argument("--method", choices=["harmonic", "sampled"])
    s = sub.add_parser("expcheck", parents=[common], help="exponential-weight checks")
    s.add_argument("--mode", choices=["wzero-check", "drho", "kernel-bound", "exp-family",
                                      "mismatch", "corrected-power"])
    s.add_argument("--nu")
    s.add_argument("--t", type=int)
    s.add_argument("--sigma", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--gamma", type=float)
    s.add_argument("--alpha-tilde", dest="alpha_tilde", type=float)
    s.add_argument("--n-pairs", dest="n_pairs", type=int)
    s = sub.add_parser("matrix", parents=[common], help="equivalence matrix over weight pairs")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = effective_config(args)
        out = Output(args.out, args.plot)
        results, status = COMMANDS[args.command](cfg, out)
    except (ConfigError, WeightError, OSError) as exc:
        print(f"radbergman: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, KernelConvergenceError, MomentUnderflow) as exc:
        print(f"radbergman: numerical budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    out.write(cfg, results, status)
    summary = {k: v for k, v in (results.items() if isinstance(results, dict) else [])
               if isinstance(v, (str, int, float, bool))}
    print(json.dumps({"command": args.command, "status": status, "out": str(out.dir), **summary},
                     default=str))
    return status


if __name__ == "__main__":
    sys.exit(main())
