"""Command-line front end: ``hwtranspile --input c.q2 --target gr --passes compile``.

Exit status is 0 on success, otherwise the code of the failure class
(2 parse, 3 config, 4 pass, 5 verification) with one diagnostic line on stderr.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .pipeline import (
    ERROR_CLASSES,
    ConfigError,
    PipelineConfig,
    VerificationError,
    parse_noise,
    parse_timing,
    read_kv,
    run,
    split_passes,
    sweep,
    write_outputs,
)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hwtranspile", description="Hardware-aware circuit compilation pipeline.")
    p.add_argument("--input", help="circuit file (.q2)")
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--target", choices=("ecr", "gr", "none"))
    p.add_argument("--passes", help="comma-separated pass list, applied in order")
    p.add_argument("--report", help="write the key-value report here (default: stdout)")
    p.add_argument("--emit", help="write the compiled circuit here")
    p.add_argument("--sweep", metavar="VAR=START:STOP[:STEP]")
    p.add_argument("--csv", help="write sweep CSV here (default: stdout)")
    p.add_argument("--seed", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--noise", help="noise model file: gate kind = fidelity")
    p.add_argument("--timing", help="timing model file: gate kind = duration in dt")
    p.add_argument("--coupling", help="line:N, star:N or an edge-list file")
    p.add_argument("--gr-baseline", action="store_true", help="use the layer-by-layer GR compiler")
    p.add_argument("--drop-final-rz", action="store_true",
                   help="drop phases right before readout; verification is then up to a final diagonal")
    return p


def config_from_args(ns: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig()
    if ns.config:
        cfg = PipelineConfig.from_kv(read_kv(ns.config))
    upd: dict = {}
    for k in ("input", "target", "report", "emit", "sweep", "csv", "seed", "shots", "coupling"):
        v = getattr(ns, k)
        if v is not None:
            upd[k] = v
    if ns.passes is not None:
        upd["passes"] = split_passes(ns.passes)
    if ns.noise:
        upd["noise"] = parse_noise(read_kv(ns.noise))
    if ns.timing:
        upd["timing"] = parse_timing(read_kv(ns.timing))
    if ns.gr_baseline:
        upd["gr_baseline"] = True
    if ns.drop_final_rz:
        upd["drop_final_rz"] = True
    return replace(cfg, **upd)


def _emit_text(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        if cfg.sweep:
            _emit_text(cfg.csv, sweep(cfg, cfg.sweep))
            return 0
        st, rep = run(cfg)
        text = write_outputs(cfg, st, rep)
        if not cfg.report:
            sys.stdout.write(text)
        if rep["verified"] is False:
            raise VerificationError("compiled circuit is not equivalent to the input")
        return 0
    except tuple(ERROR_CLASSES) as exc:
        label, code = ERROR_CLASSES[type(exc)]
        msg = " ".join(str(exc).split())
        print(f"hwtranspile: {label}: {msg}", file=sys.stderr)
        return code
    except OSError as exc:
        label, code = ERROR_CLASSES[ConfigError]
        print(f"hwtranspile: {label}: {exc.strerror}: {exc.filename}", file=sys.stderr)
        return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
