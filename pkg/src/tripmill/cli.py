"""Command-line entry point for the pipeline and the query service.

Configuration comes from an optional JSON file plus CLI-flag overrides; every
default is documented in --help. Exit codes: 0 success, 2 config error,
3 missing upstream artifact, 4 data error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .matcher import MatchParams
from .pipeline import (
    ConfigError,
    MissingArtifactError,
    PipelineConfig,
    run_all,
    stage_index,
    stage_match,
    stage_repack,
    stage_summarize,
)
from .synthgen import SynthConfig, generate_corpus

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING_ARTIFACT = 3
EXIT_DATA = 4

_TZ_RE = re.compile(r"^([+-])(\d{2}):(\d{2})$")


def parse_tz_offset(raw: str | int) -> int:
    """Accept minutes ("-300") or an HH:MM offset ("-05:00")."""

    if isinstance(raw, int):
        return raw
    m = _TZ_RE.match(raw.strip())
    if m:
        sign = -1 if m.group(1) == "-" else 1
        return sign * (int(m.group(2)) * 60 + int(m.group(3)))
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"cannot parse timezone offset {raw!r}; use minutes or +/-HH:MM")


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config file; flags override its values")
    p.add_argument("--out", type=Path, help="output root directory (default: out)")
    p.add_argument("--workers", type=int, help="parallel workers; 1 = fully serial (default 1)")
    p.add_argument("--corpus", type=Path, help="raw corpus directory or manifest.json")
    p.add_argument("--network", type=Path, help="road network JSON file")
    p.add_argument("--lrs", type=Path, help="LRS attribute CSV")
    p.add_argument("--regions", type=Path, help="postal regions JSON file")
    p.add_argument("--batch-size", type=int, help="journeys per packed file (default 10000)")
    p.add_argument("--bin-width", type=float, help="speed bin width in MPH (default 5)")
    p.add_argument("--tz-offset", help="local time offset, minutes or +/-HH:MM (default -05:00)")
    p.add_argument("--speed-unit", choices=("mps", "mph", "kph"), help="raw speed unit override")
    p.add_argument("--write-rejects", action="store_true", help="write rejected trips to a rejects file")
    p.add_argument("--sigma-gps", type=float, help="emission spread in meters (default 5)")
    p.add_argument("--beta", type=float, help="transition scale in meters (default 20)")
    p.add_argument("--candidate-radius", type=float, help="snap candidate radius in meters (default 50)")
    p.add_argument("--max-time-gap", type=float, help="decode split gap in seconds (default 60)")
    p.add_argument("--max-route-ratio", type=float, help="route/straight-line search bound (default 3)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tripmill",
        description="telematics trip pipeline: repack raw shards, map-match, summarize, serve",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic corpus with ground truth")
    synth.add_argument("--out", type=Path, required=True, help="directory for network + corpus files")
    synth.add_argument("--seed", type=int, default=7)
    synth.add_argument("--trips", type=int, default=1000)
    synth.add_argument("--grid-rows", type=int, default=10)
    synth.add_argument("--grid-cols", type=int, default=10)
    synth.add_argument("--segment-length", type=float, default=200.0)
    synth.add_argument("--sampling-period", type=float, default=3.0)
    synth.add_argument("--noise-sigma", type=float, default=0.0)
    synth.add_argument("--shard-count", type=int, default=8)
    synth.add_argument("--duplicate-rate", type=float, default=0.0)
    synth.add_argument("--split-degree", type=int, default=1)
    synth.add_argument("--congested-fraction", type=float, default=0.0)

    for name, help_text in (
        ("index", "scan raw shards and build the journey index"),
        ("repack", "rewrite the corpus into packed files of whole trips"),
        ("match", "map-match packed trips against the road network"),
        ("summarize", "build trip/traversal/histogram/OD stores"),
        ("all", "run index, repack, match and summarize in sequence"),
    ):
        _add_pipeline_flags(sub.add_parser(name, help=help_text))

    serve = sub.add_parser("serve", help="serve the summary stores over HTTP")
    _add_pipeline_flags(serve)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8600)

    return parser


def load_pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    file_cfg: dict = {}
    if args.config is not None:
        if not args.config.exists():
            raise ConfigError(f"config file not found: {args.config}")
        try:
            file_cfg = json.loads(args.config.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}")
        base = args.config.parent

        def _path(key: str) -> Path | None:
            value = file_cfg.get(key)
            return (base / value) if value is not None else None

    else:

        def _path(key: str) -> Path | None:
            return None

    match_cfg = dict(file_cfg.get("match", {}))

    def pick(flag_value, file_key, default):
        if flag_value is not None:
            return flag_value
        if file_key in file_cfg:
            return file_cfg[file_key]
        return default

    def pick_match(flag_value, key, default):
        if flag_value is not None:
            return flag_value
        return match_cfg.get(key, default)

    tz_raw = pick(args.tz_offset, "tz_offset", -300)
    cfg = PipelineConfig(
        corpus=args.corpus or _path("corpus"),
        network=args.network or _path("network"),
        lrs=args.lrs or _path("lrs"),
        regions=args.regions or _path("regions"),
        out_root=args.out or _path("out") or Path("out"),
        batch_size=int(pick(args.batch_size, "batch_size", 10_000)),
        match_params=MatchParams(
            sigma_gps=float(pick_match(args.sigma_gps, "sigma_gps", 5.0)),
            beta=float(pick_match(args.beta, "beta", 20.0)),
            candidate_radius=float(pick_match(args.candidate_radius, "candidate_radius", 50.0)),
            max_time_gap=float(pick_match(args.max_time_gap, "max_time_gap", 60.0)),
            max_route_ratio=float(pick_match(args.max_route_ratio, "max_route_ratio", 3.0)),
        ),
        bin_width_mph=float(pick(args.bin_width, "bin_width_mph", 5.0)),
        tz_offset_minutes=parse_tz_offset(tz_raw),
        speed_unit=pick(args.speed_unit, "speed_unit", None),
        workers=int(pick(args.workers, "workers", 1)),
        write_rejects=bool(args.write_rejects or file_cfg.get("write_rejects", False)),
    )
    cfg.validate()
    return cfg


def _cmd_synth(args: argparse.Namespace) -> int:
    config = SynthConfig(
        seed=args.seed,
        grid_rows=args.grid_rows,
        grid_cols=args.grid_cols,
        segment_length=args.segment_length,
        n_trips=args.trips,
        sampling_period=args.sampling_period,
        gps_noise_sigma=args.noise_sigma,
        shard_count=args.shard_count,
        duplicate_rate=args.duplicate_rate,
        split_degree=args.split_degree,
        congested_fraction=args.congested_fraction,
    )
    try:
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc))
    paths = generate_corpus(config, args.out)
    print(f"synth: corpus at {paths['corpus']} using network {paths['network']}")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    import uvicorn

    from .service import create_app, load_service_state

    if cfg.network is None or not Path(cfg.network).exists():
        raise ConfigError(f"network path does not exist: {cfg.network}")
    try:
        state = load_service_state(cfg.stores_dir, cfg.network, cfg.lrs, cfg.regions)
    except FileNotFoundError as exc:
        raise MissingArtifactError(str(exc))
    app = create_app(state)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            return _cmd_synth(args)
        cfg = load_pipeline_config(args)
        if args.command == "serve":
            return _cmd_serve(args, cfg)
        stages = {
            "index": lambda: [stage_index(cfg)],
            "repack": lambda: [stage_repack(cfg)],
            "match": lambda: [stage_match(cfg)],
            "summarize": lambda: [stage_summarize(cfg)],
            "all": lambda: run_all(cfg),
        }
        for report in stages[args.command]():
            counts = ", ".join(f"{k}={v}" for k, v in sorted(report["counts"].items()))
            print(f"{report['stage']}: {counts} ({report['wall_time_s']:.2f}s)")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingArtifactError as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING_ARTIFACT
    except (ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
