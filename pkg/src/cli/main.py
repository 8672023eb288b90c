"""
Command line entry point.

    triplet_layout.py gen    --out DIR
    triplet_layout.py train  --data DIR --ckpt FILE
    triplet_layout.py eval   --data DIR --ckpt FILE --out FILE
    triplet_layout.py probe  --data DIR --ckpt FILE --out DIR
    triplet_layout.py ablate --out DIR

Common flags: --config FILE, --set key=value (repeatable), --seed N,
--variant {baseline,triplet,triplet_da}, --verbose.
"""
import argparse
import logging
import sys
from pathlib import Path

from src.cli import commands
from src.cli.config import VARIANTS, load_run_config
from src.core.errors import TripletLayoutError
from src.core.reporting import print_status, setup_logging
from src.core.storage import default_data_dir

logger = logging.getLogger(__name__)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value run configuration file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    common.add_argument("--seed", type=int, help="override the run seed")
    common.add_argument("--variant", choices=VARIANTS, help="model variant preset")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging and progress bars")

    parser = argparse.ArgumentParser(prog="triplet_layout", description="Scene graph to layout pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="generate scenes and scene graphs")
    gen.add_argument("--out", type=Path, help="output directory (default: data directory)")

    train = sub.add_parser("train", parents=[common], help="train a layout network")
    train.add_argument("--data", type=Path, help="directory holding scenes.json (default: data directory)")
    train.add_argument("--ckpt", type=Path, help="checkpoint to write")
    train.add_argument("--out", type=Path, help="alias of --ckpt")

    for name, help_text in (("eval", "evaluate a checkpoint"), ("probe", "probe checkpoint embeddings")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--data", type=Path, help="directory holding scenes.json (default: data directory)")
        p.add_argument("--ckpt", type=Path, required=True, help="checkpoint to read")
        p.add_argument("--out", type=Path, help="metrics file (eval) or output directory (probe)")

    ablate = sub.add_parser("ablate", parents=[common], help="compare the three variants over seeds")
    ablate.add_argument("--out", type=Path, help="output directory")
    return parser


def run(args):
    cfg = load_run_config(args.config, args.overrides, seed=args.seed, variant=args.variant)
    data_dir = getattr(args, "data", None) or default_data_dir()
    if args.command == "gen":
        commands.cmd_gen(cfg, args.out or default_data_dir())
    elif args.command == "train":
        ckpt = args.ckpt or args.out or data_dir / f"model_{cfg.variant}.json"
        commands.cmd_train(cfg, data_dir, ckpt, progress=args.verbose)
    elif args.command == "eval":
        commands.cmd_eval(cfg, args.ckpt, data_dir, args.out or args.ckpt.with_name(f"{args.ckpt.stem}_metrics.json"))
    elif args.command == "probe":
        commands.cmd_probe(cfg, args.ckpt, data_dir, args.out or args.ckpt.with_name(f"{args.ckpt.stem}_probe"))
    elif args.command == "ablate":
        commands.cmd_ablate(cfg, args.out or default_data_dir() / "ablation")


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        run(args)
    except TripletLayoutError as exc:
        logger.debug("command failed", exc_info=True)
        print_status("❌", f"{type(exc).__name__}: {exc}")
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
