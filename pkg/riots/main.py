# riots/main.py
import argparse
import logging
import sys
from typing import List, Optional

from riots.core.config import Settings
from riots.core.errors import EXIT_OK, EXIT_UNEXPECTED, RiotsException
from riots.model.schemas import PipelineOptions, WhatIfPatch, validate_model
from riots.pipeline.orchestrator import Orchestrator
from riots.services.emitter import emit

logger = logging.getLogger("riots")

# subcommand -> (last pipeline stage, output section)
COMMANDS = {
    "validate": ("compile", "validate"),
    "flatten": ("flatten", "flatten"),
    "cutsets": ("cutsets", "cutsets"),
    "risk": ("risk", "risk"),
    "importance": ("importance", "importance"),
    "whatif": ("importance", "report"),
    "report": ("importance", "report"),
}

HELP = {
    "validate": "Check a graph document and its sub-systems",
    "flatten": "Print the flattened graph",
    "cutsets": "List the minimal cutsets",
    "risk": "Compute the system risk",
    "importance": "Rank basic events by Birnbaum Importance and Improvement Potential",
    "whatif": "Full report after risk or trust overrides (--set)",
    "report": "Cutsets, system risk and importance in one run",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("document", help="Path to a graph document (JSON)")
    common.add_argument("--format", choices=["table", "json", "csv"], default="table")
    common.add_argument("--out", default="-", help="Output file, '-' for stdout")
    backend = common.add_mutually_exclusive_group()
    backend.add_argument("--exact", dest="backend", action="store_const", const="exact",
                         help="Force the exact (Shannon decomposition) backend")
    backend.add_argument("--mincut", dest="backend", action="store_const", const="mincut",
                         help="Force the min-cut upper-bound backend")
    common.add_argument("--max-order", type=int, default=None, help="Drop cutsets larger than N")
    common.add_argument("--floor", type=float, default=0.0, help="Pragmatic minimal risk for Improvement Potential")
    common.add_argument("--lenient", action="store_true", help="Warn about unknown fields instead of rejecting")
    common.add_argument("--workers", type=int, default=None)
    common.add_argument("--max-sets", type=int, default=None, help="Cap on intermediate cutset rows")
    common.add_argument("--exact-limit", type=int, default=None, help="Event cap of the exact backend")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")
    common.set_defaults(backend="auto")

    parser = argparse.ArgumentParser(
        prog="riots",
        description="Supply-chain aware risk analysis of system dependency graphs",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {Settings.VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=HELP[name])
        if name == "whatif":
            p.add_argument("--set", dest="assignments", action="append", default=[], metavar="ID=VALUE",
                           help="Override a node risk (id=v) or a supplier trust (trust:id=v); repeatable")
    return parser


def _configure_logging(cfg: Settings, verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, cfg.LOG_LEVEL, logging.WARNING)
    logging.basicConfig(
        stream=sys.stderr,
        level=level,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def run(args: argparse.Namespace, cfg: Settings) -> int:
    stage, section = COMMANDS[args.command]

    # 1. Options: flags override settings
    options = validate_model(PipelineOptions, {
        "backend": args.backend,
        "max_order": args.max_order,
        "floor": args.floor,
        "exact_limit": args.exact_limit or cfg.EXACT_LIMIT,
        "max_sets": args.max_sets or cfg.MAX_SETS,
        "workers": args.workers or cfg.WORKERS,
    }, what="options")
    patch = WhatIfPatch.from_assignments(getattr(args, "assignments", []))

    orchestrator = Orchestrator(options)

    # 2. Load
    doc = orchestrator.load(args.document, lenient=args.lenient)

    # 3. Analyse & emit
    bundle = orchestrator.run_pipeline(doc, patch, until=stage)
    emit(bundle, args.format, args.out, section)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = Settings()
    _configure_logging(cfg, args.verbose)

    try:
        return run(args, cfg)
    except RiotsException as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.exception(f"❌ Unexpected failure: {e}")
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
