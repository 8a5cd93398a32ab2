from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from esadapt.problems import ProblemInstance, evaluate

_acceptance_lines: list[str] = []


class CountingObjective:
    """Wraps a problem instance and counts evaluations."""

    def __init__(self, instance: ProblemInstance) -> None:
        self.instance = instance
        self.calls = 0

    def __call__(self, x) -> float:
        self.calls += 1
        return evaluate(self.instance, x)


def make_box_instance(fid: int = 1, d: int = 2, x_opt=None, f_opt: float = 0.0) -> ProblemInstance:
    return ProblemInstance(
        id=fid,
        name="fixture",
        dimension=d,
        lower=np.full(d, -5.0),
        upper=np.full(d, 5.0),
        x_opt=np.zeros(d) if x_opt is None else x_opt,
        f_opt=f_opt,
    )


class ChatServer:
    """Local chat-completions stand-in; ``script`` is a list of (status, content)."""

    def __init__(self, script=None, default=(200, "Recommended step size: 0.05")) -> None:
        self.script = list(script or [])
        self.default = default
        self.requests: list[dict] = []
        self.timestamps: list[float] = []
        self.lock = threading.Lock()
        server = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length))
                with server.lock:
                    server.timestamps.append(time.monotonic())
                    server.requests.append(
                        {"path": self.path, "body": body, "auth": self.headers.get("Authorization")}
                    )
                    status, content = server.script.pop(0) if server.script else server.default
                payload = json.dumps({"choices": [{"message": {"role": "assistant", "content": content}}]}).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.httpd.server_address[1]}/v1"
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def chat_server():
    servers = []

    def start(script=None, **kw):
        s = ChatServer(script, **kw).__enter__()
        servers.append(s)
        return s

    yield start
    for s in servers:
        s.__exit__()


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        _acceptance_lines.append(f"{'PASS' if report.passed else 'FAIL'}  {name}")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
