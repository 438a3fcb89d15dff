"""HTTP server and client for embedding endpoints.

Wire protocol:
    POST /v1/embeddings   {"input": [text, ...]}        1 <= batch <= 1024
        -> 200 {"model_id": str,
                "data": [{"index": int, "embedding": [float, ...]}, ...]}
        -> 400 {"error": reason} on malformed or out-of-bounds requests
        -> 500 {"error": reason} when the embed function fails
    GET /healthz -> 200 "ok"

Floats ride JSON's shortest round-trip decimal form, so values survive
the wire bit-exactly.
"""

from __future__ import annotations

import json
import socket
import threading
import time
import urllib.error
import urllib.request
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .exceptions import AddressInUseError, ServiceUnavailableError

MAX_BATCH = 1024


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, *args):  # keep test output clean
        pass

    def _send(self, status: int, payload, content_type="application/json"):
        body = (
            payload.encode("utf-8")
            if isinstance(payload, str)
            else json.dumps(payload).encode("utf-8")
        )
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/healthz":
            self._send(200, "ok", content_type="text/plain")
        else:
            self._send(404, {"error": f"no route {self.path}"})

    def do_POST(self):
        if self.path != "/v1/embeddings":
            self._send(404, {"error": f"no route {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
            request = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            self._send(400, {"error": f"malformed JSON body: {exc}"})
            return
        if not isinstance(request, dict) or "input" not in request:
            self._send(400, {"error": 'body must be an object with an "input" list'})
            return
        texts = request["input"]
        if (
            not isinstance(texts, list)
            or not 1 <= len(texts) <= MAX_BATCH
            or not all(isinstance(t, str) for t in texts)
        ):
            self._send(
                400,
                {"error": f"input must be a list of 1..{MAX_BATCH} strings"},
            )
            return
        try:
            embeddings = np.asarray(self.server.embed_fn(texts), dtype=np.float64)
        except Exception as exc:  # noqa: BLE001 - report, don't crash the server
            self._send(500, {"error": f"embedding failed: {exc}"})
            return
        self._send(
            200,
            {
                "model_id": self.server.model_id,
                "data": [
                    {"index": i, "embedding": row.tolist()}
                    for i, row in enumerate(embeddings)
                ],
            },
        )


class EmbeddingServer:
    """Running endpoint handle; close() (or a with-block) shuts it down."""

    def __init__(self, server: ThreadingHTTPServer):
        self._server = server
        self._thread = threading.Thread(target=server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def url(self) -> str:
        host = self._server.server_address[0]
        return f"http://{host}:{self.port}"

    def close(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _parse_bind(bind_address) -> tuple[str, int]:
    if isinstance(bind_address, int):
        return "127.0.0.1", bind_address
    host, _, port = str(bind_address).rpartition(":")
    return host or "127.0.0.1", int(port)


def serve(embed_fn, bind_address="127.0.0.1:0", model_id="embmark") -> EmbeddingServer:
    """Expose a batch embed function (list[str] -> array) over HTTP.

    ``bind_address`` is "host:port" or a bare port; port 0 picks a free
    one (read it back from the handle).
    """
    host, port = _parse_bind(bind_address)
    try:
        httpd = ThreadingHTTPServer((host, port), _Handler)
    except OSError as exc:
        raise AddressInUseError(f"cannot bind {host}:{port}: {exc}") from exc
    httpd.daemon_threads = True
    httpd.embed_fn = embed_fn
    httpd.model_id = model_id
    return EmbeddingServer(httpd)


def query(
    endpoint: str,
    texts,
    *,
    batch_size: int = MAX_BATCH,
    max_retries: int = 3,
    backoff: float = 0.1,
    timeout: float = 30.0,
) -> np.ndarray:
    """Fetch embeddings for texts, batching and retrying transparently.

    Splits into requests of at most ``batch_size`` texts, preserves
    order, retries transient failures (connection errors, 5xx) up to
    ``max_retries`` times with exponential backoff.
    """
    texts = list(texts)
    if not texts:
        return np.zeros((0, 0))
    url = endpoint.rstrip("/")
    if not url.endswith("/v1/embeddings"):
        url = url + "/v1/embeddings"
    rows: list[list[float]] = []
    for start in range(0, len(texts), batch_size):
        batch = texts[start : start + batch_size]
        payload = json.dumps({"input": batch}).encode("utf-8")
        response = None
        last_error = None
        for attempt in range(max_retries + 1):
            request = urllib.request.Request(
                url, data=payload, headers={"Content-Type": "application/json"}
            )
            try:
                with urllib.request.urlopen(request, timeout=timeout) as resp:
                    response = json.loads(resp.read().decode("utf-8"))
                break
            except urllib.error.HTTPError as exc:
                if exc.code < 500:
                    detail = exc.read().decode("utf-8", "replace")
                    raise ServiceUnavailableError(
                        f"endpoint rejected request ({exc.code}): {detail}"
                    ) from exc
                last_error = exc
            except (urllib.error.URLError, socket.timeout, ConnectionError) as exc:
                last_error = exc
            if attempt < max_retries:
                time.sleep(backoff * (2**attempt))
        if response is None:
            raise ServiceUnavailableError(
                f"{url} unreachable after {max_retries} retries: {last_error}"
            ) from last_error
        data = sorted(response["data"], key=lambda item: item["index"])
        if len(data) != len(batch):
            raise ServiceUnavailableError(
                f"endpoint returned {len(data)} embeddings for {len(batch)} texts"
            )
        rows.extend(item["embedding"] for item in data)
    return np.asarray(rows, dtype=np.float64)


def http_service(endpoint: str, **query_kwargs):
    """Adapt an HTTP endpoint to the callable-service interface."""

    def service(texts):
        return query(endpoint, texts, **query_kwargs)

    return service
