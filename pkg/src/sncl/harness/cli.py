"""Command-line entry point.

Exit codes: 0 success, 1 validation problem (bad flags, bad config, mismatched
checkpoint), 2 runtime failure. Messages go to standard error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from ..errors import SnclError, ValidationError
from .checkpoint import Checkpoint
from .config import load_config
from .ledger import RunLedger
from .reports import emit_plots, write_run_reports
from .runners import CHECKPOINT_NAME, eval_checkpoint, run_scenario


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); route through our codes
        raise ValidationError("args", message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="sncl", description="continual-learning experiment runner")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p_train = sub.add_parser("train", help="run a scenario from a config file")
    p_train.add_argument("--config", required=True, help="TOML experiment config")
    p_train.add_argument("--seed", type=int, help="override the config seed")
    p_train.add_argument("--out", help="override the output directory")

    p_eval = sub.add_parser("eval", help="recompute metrics from a checkpoint")
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--checkpoint", required=True)

    p_report = sub.add_parser("report", help="re-emit CSV reports (and plots) from a run")
    p_report.add_argument("--run", required=True, help="run directory with run_log.json")
    p_report.add_argument("--scenario", default="", help="scenario label for CSV rows")

    p_comp = sub.add_parser("compress", help="rewrite a checkpoint with q8 weights")
    p_comp.add_argument("--checkpoint", required=True)
    p_comp.add_argument("--out", help="output path (default: <checkpoint>.q8)")

    p_ins = sub.add_parser("inspect", help="print checkpoint contents")
    p_ins.add_argument("--checkpoint", required=True)
    return parser


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, out_dir=args.out)
    ledger, _ = run_scenario(cfg)
    summary = ledger.summary()
    print(f"scenario {cfg.scenario} seed {cfg.seed}: "
          f"ACC={summary['acc']:.4f} BWT={summary['bwt']:.4f} ({ledger.metric})")
    print(f"artifacts in {Path(cfg.out_dir).resolve()}")
    return 0


def _cmd_eval(args) -> int:
    cfg = load_config(args.config)
    result = eval_checkpoint(cfg, args.checkpoint)
    for sid in sorted(result["final_row"]):
        print(f"session {sid}: {result['metric']} {result['final_row'][sid]:.6f}")
    print(f"ACC={result['acc']:.6f}")
    if "all_class_ncm" in result:
        print(f"all-class NCM accuracy {result['all_class_ncm']:.6f}")
    return 0


def _cmd_report(args) -> int:
    run_dir = Path(args.run)
    log_path = run_dir / "run_log.json"
    if not log_path.exists():
        raise ValidationError("run", f"no run_log.json under {run_dir}")
    ledger = RunLedger.read_json(log_path)
    scenario = args.scenario or _scenario_from_config(run_dir)
    written = write_run_reports(run_dir, scenario, ledger)
    written += emit_plots(run_dir, scenario, ledger)
    for path in written:
        print(f"wrote {path}")
    return 0


def _scenario_from_config(run_dir: Path) -> str:
    path = run_dir / "config.json"
    if path.exists():
        try:
            return json.loads(path.read_text())["config"]["scenario"]
        except (json.JSONDecodeError, KeyError):
            pass
    return "run"


def _cmd_compress(args) -> int:
    src = Path(args.checkpoint)
    dst = Path(args.out) if args.out else src.with_suffix(src.suffix + ".q8")
    ck = Checkpoint.read(src)
    ck.quantized().write(dst)
    before = src.stat().st_size
    after = dst.stat().st_size
    print(f"wrote {dst} ({before} -> {after} bytes, x{before / after:.2f})")
    return 0


def _cmd_inspect(args) -> int:
    ck = Checkpoint.read(args.checkpoint)
    print(f"config sha256 {ck.config_digest.hex()}")
    print(f"{len(ck.records)} records")
    for row in ck.summary():
        shape = "x".join(str(d) for d in row["shape"]) or "scalar"
        masks = ",".join(str(s) for s in row["masks"]) or "-"
        print(f"  {row['name']:<24} {row['kind']:<4} {shape:<12} "
              f"masks[{masks}] {row['payload_bytes']}B")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "report": _cmd_report,
    "compress": _cmd_compress,
    "inspect": _cmd_inspect,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        if args.command is None:
            raise ValidationError("args", "a command is required "
                                          f"(one of {', '.join(_COMMANDS)})")
        return _COMMANDS[args.command](args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except SnclError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # pragma: no cover - last-resort guard
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
