"""HTTP API around dataset ingestion, interactive selection, and export.

Sessions live in memory. Each holds one immutable base dataset plus a
cache of computed layouts keyed by the selection's relayout key (range +
groups), so revisiting a selection serves the identical layout object —
and therefore identical bytes. Highlight-only mutations never recompute.

Error contract: domain errors map to HTTP 400 with a machine-readable
``error`` field carrying the exception class name; unknown sessions are
404 ("UnknownSession") and version conflicts 409 ("StaleVersion").
"""

from __future__ import annotations

import json
import threading
import uuid
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Annotated

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .assemble import AssemblyConfig, MapTrixLayout, layout, layout_two_country, relayout
from .errors import MaptrixError, ValidationError
from .model import RegionGroup, load_dataset
from .render import StyleSpec, render
from .selection import SelectionState

__all__ = ["create_app"]

SAME_COUNTRY = "same-country"
TWO_COUNTRY = "two-country"


class _UnknownSession(Exception):
    pass


class _StaleVersion(Exception):
    def __init__(self, current: int):
        super().__init__(f"selection version is {current}")
        self.current = current


class GroupBody(BaseModel):
    id: str
    members: list[str]


class SelectionBody(BaseModel):
    version: int
    range: tuple[float, float] | None = None
    groups: list[GroupBody] = []
    highlights: list[list[str]] = []


@dataclass
class _Session:
    base: MapTrixLayout
    selection: SelectionState
    current: MapTrixLayout
    cache: OrderedDict
    cache_size: int
    lock: threading.Lock = field(default_factory=threading.Lock)


def _check_highlights(selection: SelectionState, lay: MapTrixLayout) -> None:
    o_ids = {r.id for r in lay.dataset.origins}
    d_ids = {r.id for r in lay.dataset.destinations}
    for h in selection.highlights:
        if h[0] == "origin" and h[1] not in o_ids:
            raise ValidationError(f"unknown origin region {h[1]!r} in highlight")
        if h[0] == "dest" and h[1] not in d_ids:
            raise ValidationError(f"unknown destination region {h[1]!r} in highlight")
        if h[0] == "cell" and (h[1] not in o_ids or h[2] not in d_ids):
            raise ValidationError(f"unknown cell {h[1:]} in highlight")


def create_app(
    config: AssemblyConfig | None = None,
    style: StyleSpec | None = None,
    cache_size: int = 32,
    static_dir: str | Path | None = None,
) -> FastAPI:
    """Build the application; every call returns an isolated session store."""
    cfg = config if config is not None else AssemblyConfig()
    sty = style if style is not None else StyleSpec()
    if cache_size < 1:
        raise ValidationError("cache_size must be >= 1")

    app = FastAPI(title="maptrix", docs_url=None, redoc_url=None)
    sessions: dict[str, _Session] = {}
    sessions_lock = threading.Lock()
    app.state.sessions = sessions

    @app.exception_handler(MaptrixError)
    async def _domain_error(request: Request, exc: MaptrixError):
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.exception_handler(RequestValidationError)
    async def _request_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": "ValidationError", "detail": str(exc.errors())},
        )

    @app.exception_handler(_UnknownSession)
    async def _missing(request: Request, exc: _UnknownSession):
        return JSONResponse(
            status_code=404,
            content={"error": "UnknownSession", "detail": "no such session"},
        )

    @app.exception_handler(_StaleVersion)
    async def _stale(request: Request, exc: _StaleVersion):
        return JSONResponse(
            status_code=409,
            content={
                "error": "StaleVersion",
                "detail": str(exc),
                "version": exc.current,
            },
        )

    def _get(sid: str) -> _Session:
        with sessions_lock:
            try:
                return sessions[sid]
            except KeyError:
                raise _UnknownSession() from None

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/datasets", status_code=201)
    def ingest(
        flows: Annotated[UploadFile, File()],
        boundaries: Annotated[UploadFile, File()],
        mode: Annotated[str | None, Form()] = None,
    ):
        ds = load_dataset(flows.file.read(), boundaries.file.read())
        requested = mode or (SAME_COUNTRY if ds.same_country else TWO_COUNTRY)
        if requested not in (SAME_COUNTRY, TWO_COUNTRY):
            raise ValidationError(f"unknown mode {requested!r}")
        if requested == SAME_COUNTRY:
            lay = layout(ds, cfg)
        else:
            lay = layout_two_country(ds, config=cfg)
        selection = SelectionState()
        cache: OrderedDict = OrderedDict({selection.relayout_key: lay})
        sid = uuid.uuid4().hex
        with sessions_lock:
            sessions[sid] = _Session(
                base=lay,
                selection=selection,
                current=lay,
                cache=cache,
                cache_size=cache_size,
            )
        return {
            "session_id": sid,
            "version": selection.version,
            "mode": requested,
            "rows": len(ds.origins),
            "cols": len(ds.destinations),
        }

    @app.get("/sessions/{sid}/layout")
    def get_layout(sid: str):
        s = _get(sid)
        with s.lock:
            return {
                "version": s.selection.version,
                "layout": json.loads(s.current.to_json()),
            }

    @app.put("/sessions/{sid}/selection")
    def put_selection(sid: str, body: SelectionBody):
        s = _get(sid)
        with s.lock:
            if body.version != s.selection.version:
                raise _StaleVersion(s.selection.version)
            new_sel = SelectionState(
                range=body.range,
                groups=tuple(
                    RegionGroup(g.id, frozenset(g.members)) for g in body.groups
                ),
                highlights={tuple(h) for h in body.highlights},
                version=s.selection.version + 1,
            )
            needs_relayout = new_sel.relayout_key != s.selection.relayout_key
            target = s.current
            if needs_relayout:
                key = new_sel.relayout_key
                if key in s.cache:
                    s.cache.move_to_end(key)
                    target = s.cache[key]
                else:
                    target = relayout(s.base, new_sel)
                    s.cache[key] = target
                    while len(s.cache) > s.cache_size:
                        s.cache.popitem(last=False)
            _check_highlights(new_sel, target)
            s.selection = new_sel
            s.current = target
            return {
                "version": new_sel.version,
                "relayout": needs_relayout,
                "layout": json.loads(target.to_json()),
            }

    @app.get("/sessions/{sid}/svg")
    def get_svg(sid: str):
        s = _get(sid)
        with s.lock:
            svg = render(s.current, style=sty, highlights=s.selection)
        return Response(content=svg, media_type="image/svg+xml")

    if static_dir is not None:
        root = Path(static_dir)
        if root.is_dir():
            app.mount("/", StaticFiles(directory=str(root), html=True), name="static")

    return app
