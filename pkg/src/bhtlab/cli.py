"""Command line entry point ``bht-lab``.

``bht-lab <experiment> --config <path> [--seed S] [--mode paper|desk] [--out DIR]``

Writes one CSV per result table, ``checks.csv``, SVG plots, the resolved
``config.ini`` and ``manifest.json`` listing every file with its sha256
digest.  On failure the serialized inputs go to ``replay/``.  Exit status
is 0 iff every check passes, 1 on a failed check and 2 on an error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import logging
import math
import numbers
import os
import sys
from fractions import Fraction

from .config import DEFAULTS, ConfigError, ExperimentConfig, load_config
from .experiments import ExperimentResult, StageError, run

__all__ = ["main", "write_outputs", "config_to_ini", "build_parser"]

log = logging.getLogger("bhtlab")


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, numbers.Integral):
        return str(int(v))
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, numbers.Real):
        return repr(float(v))
    if isinstance(v, numbers.Complex):
        return repr(complex(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, str)) or v is None:
        return v
    if isinstance(v, numbers.Integral):
        return int(v)
    if isinstance(v, numbers.Real) and not isinstance(v, Fraction):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    return str(v)


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def config_to_ini(cfg: ExperimentConfig) -> str:
    """Serialize a configuration in the format read by ``load_config``."""
    d = cfg.as_dict()
    cp = configparser.ConfigParser()
    sec = {k: v for k, v in d.items() if k != "options"}
    sec.update(d["options"])
    cp["experiment"] = sec
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _manifest(out: str, files: list[str], payload: dict) -> dict:
    entries = [{"path": f, "sha256": _digest(os.path.join(out, f)),
                "bytes": os.path.getsize(os.path.join(out, f))} for f in sorted(files)]
    man = dict(payload, files=entries)
    _write(os.path.join(out, "manifest.json"), json.dumps(man, indent=2, sort_keys=True) + "\n")
    return man


def _write_replay(out: str, cfg: ExperimentConfig, replay: dict, files: list[str]) -> None:
    bundle = {"config.ini": config_to_ini(cfg)}
    bundle.update(replay)
    for name, text in sorted(bundle.items()):
        rel = os.path.join("replay", name)
        _write(os.path.join(out, rel), text)
        files.append(rel)


def write_outputs(result: ExperimentResult, out: str, plots: bool = True) -> dict:
    """Write every artifact of ``result`` under ``out`` and return the manifest."""
    from .plotting import render_plot

    os.makedirs(out, exist_ok=True)
    files: list[str] = []
    _write(os.path.join(out, "config.ini"), config_to_ini(result.config))
    files.append("config.ini")
    for t in result.tables:
        name = f"{t.name}.csv"
        _write(os.path.join(out, name), table_csv(t.header, t.rows))
        files.append(name)
    _write(os.path.join(out, "checks.csv"),
           table_csv(["check", "ok", "detail"], [(c.label, c.ok, c.detail) for c in result.checks]))
    files.append("checks.csv")
    if plots:
        for p in result.plots:
            name = f"{p.name}.svg"
            render_plot(p, result.table(p.table), os.path.join(out, name))
            files.append(name)
    if not result.passed:
        _write_replay(out, result.config, result.replay, files)
    payload = {
        "experiment": result.name,
        "passed": result.passed,
        "config": result.config.as_dict(),
        "checks": [{"check": c.label, "ok": c.ok, "detail": c.detail} for c in result.checks],
        "summary": _jsonable(result.summary),
        "findings": list(result.findings),
    }
    return _manifest(out, files, payload)


def _write_error(out: str, cfg: ExperimentConfig, stage: str, message: str, replay: dict) -> dict:
    os.makedirs(out, exist_ok=True)
    files: list[str] = []
    _write_replay(out, cfg, replay, files)
    payload = {"experiment": cfg.experiment, "passed": False, "config": cfg.as_dict(),
               "error": {"stage": stage, "message": message}}
    return _manifest(out, files, payload)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bht-lab", description="Bilinear Hilbert transform experiments.")
    ap.add_argument("experiment", choices=sorted(DEFAULTS), help="experiment name")
    ap.add_argument("--config", help="INI file with an [experiment] section")
    ap.add_argument("--seed", type=int, help="override the configured seed")
    ap.add_argument("--mode", choices=("paper", "desk"), help="constant regime")
    ap.add_argument("--out", help="output directory (default out/<experiment>)")
    ap.add_argument("--no-plots", action="store_true", help="skip SVG rendering")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.experiment, seed=args.seed, mode=args.mode, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = args.out or (cfg.out if cfg.out != "out" else os.path.join("out", cfg.experiment))
    log.info("running %s into %s", cfg.experiment, out)
    try:
        result = run(cfg)
    except StageError as exc:
        _write_error(out, cfg, exc.stage, repr(exc.cause), exc.replay)
        print(f"{cfg.experiment}: {exc}; replay bundle in {os.path.join(out, 'replay')}",
              file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001  (reported with a replay bundle)
        _write_error(out, cfg, "run", repr(exc), {})
        print(f"{cfg.experiment}: {exc!r}; replay bundle in {os.path.join(out, 'replay')}",
              file=sys.stderr)
        return 2
    write_outputs(result, out, plots=not args.no_plots)
    for c in result.checks:
        print(f"{'PASS' if c.ok else 'FAIL'}  {c.label}" + (f"  ({c.detail})" if c.detail else ""))
    for f in result.findings:
        print(f"note  {f}")
    print(f"{cfg.experiment}: {'passed' if result.passed else 'FAILED'}; outputs in {out}")
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
