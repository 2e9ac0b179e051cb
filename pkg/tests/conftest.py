import socket
import threading
import time

import pytest


class UdpEcho:
    """Loopback UDP echo peer, optionally answering after a fixed delay."""

    def __init__(self, delay_s: float = 0.0):
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.bind(("127.0.0.1", 0))
        self.port = self.sock.getsockname()[1]
        self.delay_s = delay_s
        self._stop = False
        self.thread = threading.Thread(target=self._run, daemon=True)
        self.thread.start()

    def _run(self):
        self.sock.settimeout(0.05)
        while not self._stop:
            try:
                data, addr = self.sock.recvfrom(4096)
            except socket.timeout:
                continue
            except OSError:
                break
            if self.delay_s:
                time.sleep(self.delay_s)
            try:
                self.sock.sendto(data, addr)
            except OSError:
                break

    def close(self):
        self._stop = True
        self.thread.join(timeout=2)
        self.sock.close()


@pytest.fixture
def udp_echo():
    servers = []

    def make(delay_s: float = 0.0) -> UdpEcho:
        server = UdpEcho(delay_s=delay_s)
        servers.append(server)
        return server

    yield make
    for server in servers:
        server.close()
