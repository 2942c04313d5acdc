"""
Command line front-end.

``rolecluster analyze`` clusters one dataset, ``rolecluster compare``
contrasts a pre-patch and a post-patch dataset and ``rolecluster synth``
writes planted-role datasets. Exit status is 0 on success, 2 for invalid
input, invalid options or a report that --no-overwrite refuses to
replace, and 1 for anything else.
"""
import sys
import logging
import argparse
import dataclasses
from typing import List
from typing import Optional
from typing import Sequence

from rolecluster import __version__
from rolecluster._config import Config
from rolecluster._config import LINKAGES
from rolecluster._config import EMIT_KINDS
from rolecluster._config import INPUT_FORMATS
from rolecluster._config import AnalysisConfig
from rolecluster._loggers import setup_logger
from rolecluster._exceptions import InputError
from rolecluster.ingest import AgentNames
from rolecluster.pipeline import analyze
from rolecluster.pipeline import fingerprint
from rolecluster.patch_impact import compare
from rolecluster.patch_impact import AnalysisSnapshot
from rolecluster.patch_impact import PatchImpactReport
from rolecluster.report_store import ReportStore
from rolecluster.synth import PlantedModel
from rolecluster.synth import noise_sweep
from rolecluster.synth import write_dataset

logger = logging.getLogger(__name__)


def cmd_analyze(config: AnalysisConfig) -> AnalysisSnapshot:
    """
    Analyze the configured inputs and write the report files to
    ``config.out_dir``.

    :param config: Resolved settings.
    :type config: AnalysisConfig

    :return: The analysis snapshot.
    :rtype: AnalysisSnapshot
    """
    snapshot, quality = analyze(config)
    store = ReportStore(config.out_dir, over_write=config.over_write)
    store.write_snapshot(snapshot, emit=config.emit, quality=quality,
                         run=fingerprint(config))

    print(f"{snapshot.label}: k={snapshot.assignment.k} "
          f"({snapshot.k_source})")
    for i, members in enumerate(snapshot.assignment.clusters()):
        print(f"  cluster {i}: {', '.join(members)}")
    for outlier in snapshot.outliers:
        print(f"  outlier: {outlier.agent} "
              f"(joins at {outlier.join_height:.4f})")
    if snapshot.excluded:
        print(f"  excluded: {', '.join(snapshot.excluded)}")
    return snapshot


def cmd_compare(pre_config: AnalysisConfig, post_config: AnalysisConfig,
                out_dir: Optional[str] = None) -> PatchImpactReport:
    """
    Analyze both inputs, compare them and write ``impact.json``,
    ``impact.md`` and the two snapshots under ``pre/`` and ``post/``.

    :param pre_config: Settings for the pre-patch data.
    :type pre_config: AnalysisConfig

    :param post_config: Settings for the post-patch data.
    :type post_config: AnalysisConfig

    :param out_dir: Output directory, ``pre_config.out_dir`` by default.
    :type out_dir: Optional[str]

    :return: The impact report.
    :rtype: PatchImpactReport

    :raises InputError: If either input is invalid or the rosters are
        disjoint.
    """
    names = AgentNames()
    pre, pre_quality = analyze(pre_config, names)
    post, post_quality = analyze(post_config, names)
    report = compare(pre, post)

    store = ReportStore(out_dir or pre_config.out_dir,
                        over_write=pre_config.over_write)
    store.write_comparison(
        report, pre, post, emit=pre_config.emit,
        qualities=(pre_quality, post_quality),
        runs=(fingerprint(pre_config), fingerprint(post_config)))

    print(f"{pre.label} -> {post.label}: k {pre.assignment.k} -> "
          f"{post.assignment.k}, {len(report.matching.pairs)} matched "
          f"clusters, {len(report.shifts.moved)} moved agents")
    return report


def cmd_synth(model_file: str, seed: Optional[int], out: str,
              noise: Optional[float] = None,
              compositions: Optional[int] = None,
              sweep_noise: Optional[Sequence[float]] = None,
              seeds: Optional[Sequence[int]] = None,
              workers: int = 1) -> PlantedModel:
    """
    Write a synthetic dataset, or with ``sweep_noise`` a recovery table.

    :param model_file: TOML model spec.
    :type model_file: str

    :param seed: Seed override.
    :type seed: Optional[int]

    :param out: CSV file to write.
    :type out: str

    :param noise: Noise override.
    :type noise: Optional[float]

    :param compositions: Override of the number of compositions.
    :type compositions: Optional[int]

    :param sweep_noise: Noise levels; writes ARI per (noise, seed) instead of
        a dataset.
    :type sweep_noise: Optional[Sequence[float]]

    :param seeds: Seeds of the sweep, 0..4 by default.
    :type seeds: Optional[Sequence[int]]

    :return: The model used.
    :rtype: PlantedModel

    :raises InputError: If the model spec is invalid or infeasible.
    """
    model = PlantedModel.from_file(model_file)
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if noise is not None:
        overrides["noise"] = noise
    if compositions is not None:
        overrides["num_compositions"] = compositions
    model = dataclasses.replace(model, **overrides).validate()

    if sweep_noise:
        table = noise_sweep(model, sweep_noise,
                            seeds if seeds else range(5), workers=workers)
        table.to_csv(out, index=False, float_format="%.17g",
                     lineterminator="\n")
        for level, ari in table.groupby("noise").ari.mean().items():
            print(f"noise {level:g}: mean ARI {ari:.4f}")
    else:
        write_dataset(model, out)
        print(f"wrote {model.num_compositions} compositions to {out}")
    return model


def _add_analysis_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML settings file.")
    parser.add_argument("--format", dest="input_format",
                        choices=INPUT_FORMATS)
    parser.add_argument("--map", dest="map_filter",
                        help="Keep only this map.")
    parser.add_argument("--k", type=int,
                        help="Number of clusters, silhouette-selected "
                             "if omitted.")
    parser.add_argument("--out", dest="out_dir",
                        help="Output directory.")
    parser.add_argument("--emit",
                        help=f"Comma separated subset of "
                             f"{','.join(EMIT_KINDS)}.")
    parser.add_argument("--lenient", action="store_true", default=None,
                        help="Skip invalid rows instead of failing.")
    parser.add_argument("--sqrt-jsd", dest="sqrt_jsd", action="store_true",
                        default=None,
                        help="Cluster on the square root of JSD.")
    parser.add_argument("--linkage", choices=LINKAGES)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--no-overwrite", dest="over_write",
                        action="store_false", default=None,
                        help="Fail instead of replacing existing reports.")
    parser.add_argument("--log-file", dest="log_file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rolecluster",
        description="Role clusters from agent co-occurrence.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("analyze", help="Cluster one dataset.")
    p.add_argument("--input", dest="inputs", nargs="+", required=True,
                   help="One or more CSV/TSV files.")
    p.add_argument("--label", help="Name of the snapshot.")
    _add_analysis_options(p)

    p = commands.add_parser("compare",
                            help="Compare pre- and post-patch datasets.")
    p.add_argument("--pre", nargs="+", required=True)
    p.add_argument("--post", nargs="+", required=True)
    p.add_argument("--pre-label", dest="pre_label")
    p.add_argument("--post-label", dest="post_label")
    _add_analysis_options(p)

    p = commands.add_parser("synth", help="Write a planted-role dataset.")
    p.add_argument("--model", required=True, help="TOML model spec.")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="CSV file to write.")
    p.add_argument("--noise", type=float)
    p.add_argument("--compositions", type=int)
    p.add_argument("--sweep-noise", dest="sweep_noise", type=float,
                   nargs="+", help="Write an ARI table over these noise "
                                   "levels instead of a dataset.")
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--log-file", dest="log_file")
    return parser


def resolve_config(args: argparse.Namespace, inputs: List[str],
                   label: Optional[str] = None) -> AnalysisConfig:
    """
    Settings file values overridden by the command line flags that were
    given.
    """
    settings = Config(args.config).settings
    overrides = {"inputs": list(inputs)}
    for name in ("input_format", "map_filter", "k", "out_dir", "sqrt_jsd",
                 "linkage", "workers", "log_file", "over_write"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if args.emit is not None:
        overrides["emit"] = [e.strip() for e in args.emit.split(",")
                             if e.strip()]
    if args.lenient:
        overrides["strictness"] = "lenient"
    if label is not None:
        overrides["label"] = label
    return dataclasses.replace(settings, **overrides).validate()


def _run(args: argparse.Namespace) -> None:
    if args.command == "synth":
        if args.workers < 1:
            raise InputError(f"workers must be positive, got {args.workers}.")
        cmd_synth(args.model, args.seed, args.out, noise=args.noise,
                  compositions=args.compositions,
                  sweep_noise=args.sweep_noise, seeds=args.seeds,
                  workers=args.workers)
        return

    if args.command == "analyze":
        config = resolve_config(args, args.inputs, args.label)
        if config.log_file and not args.log_file:
            setup_logger(config.log_file)
        cmd_analyze(config)
        return

    pre = resolve_config(args, args.pre, args.pre_label)
    post = resolve_config(args, args.post, args.post_label)
    if pre.log_file and not args.log_file:
        setup_logger(pre.log_file)
    cmd_compare(pre, post)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Console entry point.

    :param argv: Arguments without the program name, ``sys.argv[1:]`` if
        None.
    :type argv: Optional[Sequence[str]]

    :return: Exit status.
    :rtype: int
    """
    args = build_parser().parse_args(argv)
    setup_logger(args.log_file)
    try:
        _run(args)
    except (InputError, FileExistsError) as e:
        logger.error(f"Input error: {e}")
        print(f"rolecluster: error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        logger.exception("Unexpected failure")
        print(f"rolecluster: internal error: {e}", file=sys.stderr)
        return 1
    return 0
