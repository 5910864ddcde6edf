"""HTTP backend for the annotation companion.

Thin JSON layer over :class:`~stepcoin.store.ProjectStore`: every project is a
subdirectory of the data directory containing a ``store.json``.  Handlers are
served from a threading server; write safety comes from the store's own
locking, reads never block on writers.

Routes (all bodies UTF-8 JSON, errors as ``{"code", "message"}``):

    GET  /healthz
    GET  /api/projects/<p>/lexicon
    GET  /api/projects/<p>/videos
    GET  /api/projects/<p>/videos/<v>/frames?fps=2
    GET  /api/projects/<p>/videos/<v>/annotation
    POST /api/projects/<p>/videos/<v>/annotation   {draft, expected_revision, complete}
    POST /api/projects/<p>/videos/<v>/advance      {expected_revision}
    GET  /api/projects/<p>/videos/<v>/media        (Range supported, when present)
    GET  /api/projects/<p>/export
    GET  /frames/<p>/<v>/<rate>/<file>             static frame images
    GET  /ui/...                                   browser client, when ui_dir is set
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import asdict
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .errors import (
    IncompleteProject,
    ParseError,
    RevisionConflict,
    StepcoinError,
    UnknownProject,
    UnknownVideo,
    UnsupportedRate,
    ValidationError,
    WrongPass,
)
from .lexicon import serialize_lexicon
from .store import STORE_FILENAME, ProjectStore, _draft_from_dict

_STATUS_BY_ERROR = {
    UnknownProject: 404,
    UnknownVideo: 404,
    UnsupportedRate: 400,
    ParseError: 400,
    ValidationError: 422,
    WrongPass: 409,
    RevisionConflict: 409,
    IncompleteProject: 409,
}


def _error_code(exc: StepcoinError) -> str:
    name = type(exc).__name__
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


class ProjectRegistry:
    """Lazy-loading map of project id -> store for one data directory."""

    def __init__(self, data_dir: str | os.PathLike):
        self.data_dir = os.fspath(data_dir)
        self._stores: dict[str, ProjectStore] = {}
        self._lock = threading.Lock()

    def get(self, project_id: str) -> ProjectStore:
        if not re.fullmatch(r"[A-Za-z0-9_.-]+", project_id) or ".." in project_id:
            raise UnknownProject(f"unknown project '{project_id}'")
        with self._lock:
            if project_id not in self._stores:
                directory = os.path.join(self.data_dir, project_id)
                if not os.path.isfile(os.path.join(directory, STORE_FILENAME)):
                    raise UnknownProject(f"unknown project '{project_id}'")
                self._stores[project_id] = ProjectStore(directory)
            return self._stores[project_id]


class AnnotationHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "stepcoin-annotation"

    # quiet by default; tests and the CLI opt into logging
    def log_message(self, fmt, *args):  # noqa: D102
        if getattr(self.server, "verbose", False):
            super().log_message(fmt, *args)

    @property
    def registry(self) -> ProjectRegistry:
        return self.server.registry  # type: ignore[attr-defined]

    # -- plumbing --------------------------------------------------------------

    def _send_json(self, payload, status: int = 200) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, exc: StepcoinError) -> None:
        status = _STATUS_BY_ERROR.get(type(exc), 400)
        self._send_json({"code": _error_code(exc), "message": str(exc)}, status)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            raise ParseError("empty request body")
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ParseError(f"request body is not valid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise ParseError("request body must be a JSON object")
        return doc

    def _send_file(self, path: str, content_type: str) -> None:
        try:
            with open(path, "rb") as handle:
                data = handle.read()
        except OSError:
            self._send_json({"code": "not_found", "message": "file not found"}, 404)
            return
        range_header = self.headers.get("Range")
        if range_header:
            match = re.fullmatch(r"bytes=(\d*)-(\d*)", range_header.strip())
            if match and (match.group(1) or match.group(2)):
                start = int(match.group(1)) if match.group(1) else None
                end = int(match.group(2)) if match.group(2) else None
                total = len(data)
                if start is None:  # suffix range: last N bytes
                    start = max(total - (end or 0), 0)
                    end = total - 1
                else:
                    end = min(end if end is not None else total - 1, total - 1)
                if start > end or start >= total:
                    self.send_response(416)
                    self.send_header("Content-Range", f"bytes */{total}")
                    self.send_header("Content-Length", "0")
                    self.end_headers()
                    return
                chunk = data[start : end + 1]
                self.send_response(206)
                self.send_header("Content-Type", content_type)
                self.send_header("Content-Range", f"bytes {start}-{end}/{total}")
                self.send_header("Accept-Ranges", "bytes")
                self.send_header("Content-Length", str(len(chunk)))
                self.end_headers()
                self.wfile.write(chunk)
                return
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Accept-Ranges", "bytes")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    _UI_TYPES = {
        ".html": "text/html; charset=utf-8",
        ".js": "text/javascript; charset=utf-8",
        ".css": "text/css; charset=utf-8",
        ".map": "application/json",
        ".svg": "image/svg+xml",
    }

    def _serve_ui(self, path: str) -> None:
        ui_dir = getattr(self.server, "ui_dir", None)
        if not ui_dir:
            self._send_json(
                {"code": "no_ui", "message": "server started without a UI directory"}, 404
            )
            return
        relative = path[3:].lstrip("/") if path.startswith("/ui") else ""
        relative = relative or "index.html"
        full = os.path.realpath(os.path.join(ui_dir, relative))
        if not full.startswith(os.path.realpath(ui_dir) + os.sep) and full != os.path.realpath(
            os.path.join(ui_dir, "index.html")
        ):
            self._send_json({"code": "not_found", "message": "bad path"}, 404)
            return
        ext = os.path.splitext(full)[1]
        self._send_file(full, self._UI_TYPES.get(ext, "application/octet-stream"))

    # -- routing ---------------------------------------------------------------

    def do_GET(self) -> None:  # noqa: N802
        parsed = urlparse(self.path)
        path = parsed.path
        try:
            if path == "/healthz":
                self._send_json({"status": "ok"})
                return
            if path == "/" or path.startswith("/ui"):
                self._serve_ui(path)
                return
            match = re.fullmatch(r"/api/projects/([^/]+)/lexicon", path)
            if match:
                store = self.registry.get(match.group(1))
                payload = serialize_lexicon(store.lexicon)
                self.send_response(200)
                self.send_header("Content-Type", "application/json; charset=utf-8")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)
                return
            match = re.fullmatch(r"/api/projects/([^/]+)/videos", path)
            if match:
                store = self.registry.get(match.group(1))
                self._send_json(
                    {"videos": [asdict(entry) for entry in store.list_videos()]}
                )
                return
            match = re.fullmatch(r"/api/projects/([^/]+)/videos/([^/]+)/frames", path)
            if match:
                store = self.registry.get(match.group(1))
                query = parse_qs(parsed.query)
                try:
                    fps = float(query.get("fps", ["2"])[0])
                except ValueError as exc:
                    raise UnsupportedRate(f"bad fps parameter ({exc})") from exc
                self._send_json({"fps": fps, "frames": store.frames(match.group(2), fps)})
                return
            match = re.fullmatch(r"/api/projects/([^/]+)/videos/([^/]+)/annotation", path)
            if match:
                store = self.registry.get(match.group(1))
                self._send_json(store.get_annotation(match.group(2)))
                return
            match = re.fullmatch(r"/api/projects/([^/]+)/videos/([^/]+)/media", path)
            if match:
                store = self.registry.get(match.group(1))
                entry = store.get_video(match.group(2))
                if not entry.media_path or not os.path.isfile(entry.media_path):
                    self._send_json(
                        {"code": "no_media", "message": "video file not available"}, 404
                    )
                    return
                self._send_file(entry.media_path, "video/mp4")
                return
            match = re.fullmatch(r"/api/projects/([^/]+)/export", path)
            if match:
                store = self.registry.get(match.group(1))
                payload = store.export_annotations()
                self.send_response(200)
                self.send_header("Content-Type", "application/json; charset=utf-8")
                self.send_header(
                    "Content-Disposition",
                    f'attachment; filename="{store.project_id}-annotations.json"',
                )
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)
                return
            match = re.fullmatch(r"/frames/([^/]+)/([^/]+)/([^/]+)/([^/]+)", path)
            if match:
                store = self.registry.get(match.group(1))
                frame_path = store.frame_file(match.group(2), match.group(3), match.group(4))
                self._send_file(frame_path, "image/jpeg")
                return
            self._send_json({"code": "not_found", "message": f"no route for {path}"}, 404)
        except StepcoinError as exc:
            self._send_error_json(exc)

    def do_POST(self) -> None:  # noqa: N802
        path = urlparse(self.path).path
        try:
            match = re.fullmatch(r"/api/projects/([^/]+)/videos/([^/]+)/annotation", path)
            if match:
                store = self.registry.get(match.group(1))
                body = self._read_body()
                if "draft" not in body or "expected_revision" not in body:
                    raise ParseError("body must carry 'draft' and 'expected_revision'")
                draft_doc = dict(body["draft"])
                draft_doc.setdefault("video_id", match.group(2))
                try:
                    draft = _draft_from_dict(draft_doc)
                except (KeyError, TypeError, ValueError) as exc:
                    raise ParseError(f"malformed draft ({exc})") from exc
                result = store.submit_annotation(
                    match.group(2),
                    draft,
                    expected_revision=int(body["expected_revision"]),
                    complete=bool(body.get("complete", False)),
                )
                self._send_json(result)
                return
            match = re.fullmatch(r"/api/projects/([^/]+)/videos/([^/]+)/advance", path)
            if match:
                store = self.registry.get(match.group(1))
                body = self._read_body()
                if "expected_revision" not in body:
                    raise ParseError("body must carry 'expected_revision'")
                result = store.advance(
                    match.group(2), expected_revision=int(body["expected_revision"])
                )
                self._send_json(result)
                return
            self._send_json({"code": "not_found", "message": f"no route for {path}"}, 404)
        except StepcoinError as exc:
            self._send_error_json(exc)


def create_server(
    data_dir: str | os.PathLike,
    port: int = 8787,
    host: str = "127.0.0.1",
    ui_dir: str | os.PathLike | None = None,
) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), AnnotationHandler)
    server.registry = ProjectRegistry(data_dir)  # type: ignore[attr-defined]
    server.verbose = False  # type: ignore[attr-defined]
    server.ui_dir = os.fspath(ui_dir) if ui_dir else None  # type: ignore[attr-defined]
    return server


def serve_forever(
    data_dir: str | os.PathLike,
    port: int,
    host: str = "127.0.0.1",
    ui_dir: str | os.PathLike | None = None,
) -> None:
    server = create_server(data_dir, port, host, ui_dir)
    server.verbose = True  # type: ignore[attr-defined]
    print(f"annotation service on http://{host}:{port} (data: {os.fspath(data_dir)})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
