"""Command-line entry points: one-shot SVG rendering and the HTTP server.

Failures exit with a stable per-error-class code (see EXIT_CODES, also
printed in ``render --help``) and the error name on stderr, so scripts
can branch on the failure kind.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import uvicorn

from .assemble import AssemblyConfig, layout, layout_two_country
from .errors import IngestError, MaptrixError, ModeError, RangeError, ValidationError
from .model import RegionGroup, aggregate, filter_by_range, load_dataset
from .render import StyleSpec, render
from .service import create_app

__all__ = ["main", "EXIT_CODES"]

EXIT_CODES = {
    "IngestError": 3,
    "ValidationError": 4,
    "GeometryError": 5,
    "AggregationError": 6,
    "ContiguityError": 7,
    "RangeError": 8,
    "DegenerateSiteError": 9,
    "SteepLeaderError": 10,
    "ModeError": 11,
    "LayoutError": 12,
}
_FALLBACK_EXIT = 13

_EXIT_TABLE = "exit codes:\n  0 success\n  2 usage\n" + "".join(
    f"  {code} {name}\n" for name, code in EXIT_CODES.items()
) + f"  {_FALLBACK_EXIT} other error"


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc


def _parse_filter(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise RangeError(f"malformed --filter {text!r}: expected LO:HI")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise RangeError(f"malformed --filter {text!r}: {exc}") from exc


def _load_groups(path: str) -> tuple[RegionGroup, ...]:
    try:
        entries = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"group file {path}: {exc}") from exc
    if not isinstance(entries, list):
        raise ValidationError(
            f"group file {path}: expected a list of {{id, members}} objects"
        )
    groups = []
    for entry in entries:
        if not isinstance(entry, dict) or "id" not in entry or "members" not in entry:
            raise ValidationError(
                f"group file {path}: each entry needs 'id' and 'members'"
            )
        groups.append(RegionGroup(str(entry["id"]), frozenset(entry["members"])))
    return tuple(groups)


def _load_style(path: str) -> StyleSpec:
    try:
        fields = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"style file {path}: {exc}") from exc
    if not isinstance(fields, dict):
        raise ValidationError(f"style file {path}: expected an object")
    if "cell_scale" in fields:
        fields["cell_scale"] = tuple(fields["cell_scale"])
    if "grey_range" in fields:
        fields["grey_range"] = tuple(fields["grey_range"])
    try:
        return StyleSpec(**fields)
    except TypeError as exc:
        raise ValidationError(f"style file {path}: {exc}") from exc


def _merge_geojson(first: bytes, second: bytes) -> bytes:
    try:
        a = json.loads(first)
        b = json.loads(second)
        features = list(a.get("features", [])) + list(b.get("features", []))
    except (json.JSONDecodeError, AttributeError) as exc:
        raise IngestError(f"cannot merge boundary files: {exc}") from exc
    return json.dumps({"type": "FeatureCollection", "features": features}).encode()


def _cmd_render(args: argparse.Namespace) -> int:
    files = args.files
    if len(files) not in (2, 4):
        raise ValidationError(
            "expected FLOWS BOUNDARIES or FLOWS BOUNDARIES DEST_FLOWS DEST_BOUNDARIES"
        )
    mode = args.mode
    dest_ds = None
    if len(files) == 4:
        if mode == "same-country":
            raise ModeError("four input files describe two separate countries")
        mode = "two-country"
        merged = _merge_geojson(_read(files[1]), _read(files[3]))
        ds = load_dataset(_read(files[0]), merged)
        dest_ds = load_dataset(_read(files[2]), _read(files[3]))
    else:
        ds = load_dataset(_read(files[0]), _read(files[1]))
    if mode is None:
        mode = "same-country" if ds.same_country else "two-country"
    if args.filter is not None:
        lo, hi = _parse_filter(args.filter)
        ds, _kept = filter_by_range(ds, lo, hi)
    if args.group is not None:
        ds = aggregate(ds, _load_groups(args.group))
    cfg = AssemblyConfig(k=args.k, w=args.w)
    if mode == "same-country":
        lay = layout(ds, cfg)
    else:
        lay = layout_two_country(ds, dest_ds, config=cfg)
    style = _load_style(args.seed_style) if args.seed_style else None
    svg = render(lay, style=style)
    if args.out:
        Path(args.out).write_bytes(svg)
    else:
        sys.stdout.buffer.write(svg)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    host = args.host or os.environ.get("MAPTRIX_HOST", "127.0.0.1")
    port = args.port if args.port is not None else int(
        os.environ.get("MAPTRIX_PORT", "8000")
    )
    cache_size = args.cache_size if args.cache_size is not None else int(
        os.environ.get("MAPTRIX_CACHE_SIZE", "32")
    )
    static_dir = args.static_dir or os.environ.get("MAPTRIX_STATIC_DIR")
    style_path = args.seed_style or os.environ.get("MAPTRIX_STYLE")
    style = _load_style(style_path) if style_path else None
    app = create_app(style=style, cache_size=cache_size, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maptrix",
        description="Flow maps joining an OD matrix to maps with leader lines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pr = sub.add_parser(
        "render",
        help="render a dataset to a standalone SVG file",
        epilog=_EXIT_TABLE,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    pr.add_argument(
        "files",
        nargs="+",
        metavar="FILE",
        help="FLOWS BOUNDARIES, or FLOWS BOUNDARIES DEST_FLOWS DEST_BOUNDARIES "
        "for a two-country view with separate destination geometry",
    )
    pr.add_argument("--out", metavar="PATH", help="output SVG path (default stdout)")
    pr.add_argument(
        "--mode",
        choices=["same-country", "two-country"],
        default=None,
        help="panel mode; inferred from the dataset when omitted",
    )
    pr.add_argument("--filter", metavar="LO:HI", help="keep only flows in [LO, HI]")
    pr.add_argument(
        "--group", metavar="FILE", help="JSON list of {id, members} region groups"
    )
    pr.add_argument("--w", type=float, default=1.0, help="site-drift penalty weight")
    pr.add_argument("--k", type=float, default=1.0, help="leader diagonal gradient")
    pr.add_argument(
        "--seed-style",
        dest="seed_style",
        metavar="FILE",
        help="JSON object overriding style fields (ramp, radii, flags)",
    )
    pr.set_defaults(func=_cmd_render)

    ps = sub.add_parser("serve", help="run the HTTP service")
    ps.add_argument("--host", default=None, help="bind address (env MAPTRIX_HOST)")
    ps.add_argument("--port", type=int, default=None, help="port (env MAPTRIX_PORT)")
    ps.add_argument(
        "--cache-size",
        type=int,
        default=None,
        help="cached layouts per session (env MAPTRIX_CACHE_SIZE)",
    )
    ps.add_argument(
        "--static-dir",
        default=None,
        help="directory of UI assets to serve at / (env MAPTRIX_STATIC_DIR)",
    )
    ps.add_argument(
        "--seed-style",
        dest="seed_style",
        metavar="FILE",
        help="JSON style overrides for SVG export (env MAPTRIX_STYLE)",
    )
    ps.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MaptrixError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CODES.get(type(exc).__name__, _FALLBACK_EXIT)


if __name__ == "__main__":
    raise SystemExit(main())
