"""UDP listener feeding raw datagrams into the pipeline.

One frame per datagram; bad frames are counted by the pipeline, never
fatal. The receive buffer is raised because collection bursts at
interval boundaries arrive faster than attribution drains them.
"""

from __future__ import annotations

import socket
import threading

from ..exceptions import BindFailure
from .pipeline import Pipeline

_RCVBUF_BYTES = 4 << 20
_MAX_FRAME = 65535


class UdpListener:
    def __init__(self, host: str, port: int, pipeline: Pipeline):
        self.pipeline = pipeline
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, _RCVBUF_BYTES)
        try:
            self._sock.bind((host, port))
        except OSError as exc:
            self._sock.close()
            raise BindFailure(host, port, str(exc)) from exc
        self.address = self._sock.getsockname()
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._loop, daemon=True)

    def start(self) -> None:
        self._thread.start()

    def _loop(self) -> None:
        self._sock.settimeout(0.5)
        while not self._stop.is_set():
            try:
                data, _addr = self._sock.recvfrom(_MAX_FRAME)
            except socket.timeout:
                continue
            except OSError:
                break
            self.pipeline.feed_datagram(data)

    def stop(self) -> None:
        self._stop.set()
        self._sock.close()
        if self._thread.is_alive():
            self._thread.join(timeout=2.0)
