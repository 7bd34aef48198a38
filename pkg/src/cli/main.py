# Entry point: python -m src.cli.main <command> --config configs/smoke.json
from __future__ import annotations
import argparse
import logging
import sys
from typing import List, Optional

from src.cli.commands import cmd_baseline, cmd_eval, cmd_export_figures, cmd_train_ae, cmd_train_prdad
from src.cli.config import load_config
from src.errors import CheckpointError, ConfigError, DivergenceError, IdxFormatError, NonFiniteError

log = logging.getLogger("src.cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4

def build_parser() -> argparse.ArgumentParser:
	p = argparse.ArgumentParser(prog="prdad", description="Fourier phase retrieval with sparse auto-decoders")
	p.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
	sub = p.add_subparsers(dest="command", required=True)

	def common(sp: argparse.ArgumentParser, checkpoint: bool) -> None:
		sp.add_argument("--config", required=True, help="JSON experiment config")
		sp.add_argument("--seed", type=int, default=None)
		sp.add_argument("--out", default=None, help="output directory (default out/<run_name>)")
		sp.add_argument("--workers", type=int, default=None, help="1 keeps every run bit-reproducible")
		if checkpoint:
			sp.add_argument("--checkpoint", default=None)

	common(sub.add_parser("train-ae", help="train the convolutional sparse autoencoder"), checkpoint=True)
	common(sub.add_parser("train-prdad", help="train the magnitude-to-image network"), checkpoint=True)
	ev = sub.add_parser("eval", help="score a trained checkpoint on the test split")
	common(ev, checkpoint=True)
	ev.add_argument("--oracle", action="store_true", help="feed the ground truth through the reporting path")
	common(sub.add_parser("baseline", help="error reduction / HIO on the test split"), checkpoint=False)

	fig = sub.add_parser("export-figures", help="re-plot curves and grids of a finished run")
	fig.add_argument("run_dir", nargs="?", default=None)
	fig.add_argument("--out", default=None, help="run directory (alternative to the positional form)")
	return p

def run(args: argparse.Namespace) -> None:
	if args.command == "export-figures":
		run_dir = args.run_dir or args.out
		if not run_dir:
			raise ConfigError("export-figures needs a run directory")
		cmd_export_figures(run_dir)
		return

	cfg = load_config(args.config, seed=args.seed, out=args.out, workers=args.workers)
	log.info("%s: run %s, seed %d, workers %d -> %s", args.command, cfg.run_name, cfg.run.seed, cfg.run.workers, cfg.output_dir)
	if args.command == "train-ae":
		cmd_train_ae(cfg, args.checkpoint)
	elif args.command == "train-prdad":
		cmd_train_prdad(cfg, args.checkpoint)
	elif args.command == "eval":
		cmd_eval(cfg, args.checkpoint, oracle=args.oracle)
	elif args.command == "baseline":
		cmd_baseline(cfg)

def main(argv: Optional[List[str]] = None) -> int:
	args = build_parser().parse_args(argv)
	logging.basicConfig(level=getattr(logging, args.log_level), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
	try:
		run(args)
	except ConfigError as e:
		log.error("config error: %s", e)
		return EXIT_CONFIG
	except DivergenceError as e:
		log.error("training diverged: %s (last checkpoint: %s)", e, e.last_checkpoint or "none")
		return EXIT_DIVERGED
	except NonFiniteError as e:
		log.error("non-finite values: %s", e)
		return EXIT_DIVERGED
	except (OSError, IdxFormatError, CheckpointError) as e:
		log.error("i/o error: %s", e)
		return EXIT_IO
	return EXIT_OK

if __name__ == "__main__":
	sys.exit(main())
