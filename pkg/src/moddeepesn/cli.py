"""Command-line driver: ``moddeepesn {generate-data,run,sweep,evolve}``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .data import gen_mackey_glass, save_csv_series
from .errors import ConfigError, ModDeepEsnError
from .evolve import ChoiceGene, EvolutionConfig, IntGene, esn_search_space, evolve
from .experiment import (
    ExperimentConfig,
    GenomeFitness,
    config_for_genome,
    config_key,
    emit_report,
    parse_config,
    prepare_split,
    run_experiment,
    stage,
    sweep,
)

log = logging.getLogger("moddeepesn")

# flags whose names differ from the generic ``--<config-key>`` spelling
_RESERVED = {"ip_enabled", "format", "output", "seed", "runs", "topology"}


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ConfigError.exit_code, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--preset", choices=["mackey-glass", "temperature"], help="start from a published configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--topology", help="wide:N | layered:N | crisscross:N | wide+layered:WxD")
    p.add_argument("--ip", dest="ip_enabled", action="store_const", const=True, help="enable IP pre-training")
    p.add_argument("--no-ip", dest="ip_enabled", action="store_const", const=False)
    p.add_argument("--runs", type=int)
    p.add_argument("--output", help="output path, '-' for stdout")
    p.add_argument("--format", choices=["csv", "text"])
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    group = p.add_argument_group("config keys")
    for f in dataclasses.fields(ExperimentConfig):
        if f.name in _RESERVED:
            continue
        flag = "--" + config_key(f.name).replace(".", "-").replace("_", "-")
        group.add_argument(flag, dest=f"key_{f.name}", metavar="VALUE")


def _overrides(args) -> dict:
    values = {}
    for f in dataclasses.fields(ExperimentConfig):
        value = getattr(args, f"key_{f.name}", None)
        if value is None and f.name in _RESERVED:
            value = getattr(args, f.name, None)
        if value is not None:
            values[f.name] = value
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        values[key.strip()] = value.strip()
    return values


def config_from_args(args) -> ExperimentConfig:
    return parse_config(args.config, _overrides(args), preset=args.preset)


def _write(text: str, path: Optional[str]) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_generate_data(args) -> int:
    cfg = config_from_args(args)
    n = args.length or cfg.train_len + cfg.test_len + cfg.horizon
    with stage("generate data"):
        series = gen_mackey_glass(
            n, cfg.mg_tau, cfg.mg_dt, cfg.mg_a, cfg.mg_b, cfg.mg_p, cfg.mg_x0, cfg.mg_transient
        )
    save_csv_series(series, sys.stdout if cfg.output in (None, "-") else cfg.output)
    return 0


def cmd_run(args) -> int:
    cfg = config_from_args(args)
    report = run_experiment(cfg)
    _write(emit_report([report], cfg.format), cfg.output)
    return 0


def cmd_sweep(args) -> int:
    cfg = config_from_args(args)
    reports = sweep(cfg)
    _write(emit_report(reports, cfg.format), cfg.output)
    return 0


def _search_space(args):
    overrides = {}
    if args.n_r_choices:
        try:
            sizes = tuple(int(v) for v in args.n_r_choices.split(","))
        except ValueError:
            raise ConfigError(f"--n-r-choices expects integers, got {args.n_r_choices!r}") from None
        if min(sizes) < 1:
            raise ConfigError("--n-r-choices must be positive")
        overrides["n_r"] = ChoiceGene(sizes)
    if args.max_width:
        overrides["width"] = IntGene(1, args.max_width)
    return esn_search_space(**overrides)


def cmd_evolve(args) -> int:
    cfg = config_from_args(args)
    ga = EvolutionConfig(
        population=args.population,
        generations=args.generations,
        mutation_mode=args.mutation_mode,
        seed=cfg.seed,
    )
    split = prepare_split(cfg)
    fitness = GenomeFitness(cfg, split, seeds=args.fitness_seeds)

    log_fh = open(args.log, "w", newline="", encoding="utf-8") if args.log else None
    writer = csv.writer(log_fh or sys.stderr, lineterminator="\n")
    writer.writerow(["generation", "best_fitness", "mean_fitness", "best_genome"])

    def on_generation(stats):
        writer.writerow(
            [
                stats.generation,
                repr(stats.best_fitness),
                repr(stats.mean_fitness),
                json.dumps(stats.best_genome, sort_keys=True),
            ]
        )
        if log_fh:
            log_fh.flush()

    try:
        with stage("evolve"):
            best, _ = evolve(_search_space(args), fitness, ga, on_generation=on_generation)
    finally:
        if log_fh:
            log_fh.close()
    # the emitted config must not redirect a later `run` onto this file
    _write(config_for_genome(cfg, best).replace(output="-").to_text(), cfg.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="moddeepesn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("generate-data", help="write a Mackey-Glass series as single-column CSV")
    _add_common(p)
    p.add_argument("--length", type=int, help="number of samples (default: train+test+horizon)")
    p.set_defaults(func=cmd_generate_data)

    p = sub.add_parser("run", help="train and evaluate one configuration over several seeds")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="all four topologies with IP off and on")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("evolve", help="genetic-algorithm hyperparameter search")
    _add_common(p)
    p.add_argument("--population", type=int, default=50)
    p.add_argument("--generations", type=int, default=50)
    p.add_argument("--mutation-mode", choices=["gene", "individual"], default="gene")
    p.add_argument("--fitness-seeds", type=int, default=3)
    p.add_argument("--log", help="per-generation CSV log (default: stderr)")
    p.add_argument("--n-r-choices", help="comma-separated reservoir sizes to search (default: 128,256,512,1024)")
    p.add_argument("--max-width", type=int, help="largest width gene (default: 4)")
    p.set_defaults(func=cmd_evolve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ModDeepEsnError as exc:
        where = getattr(exc, "stage", None) or "config"
        print(f"moddeepesn: error [{where}]: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
