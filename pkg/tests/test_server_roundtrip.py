"""End-to-end check of the client/server split: CLI -> HTTP -> service."""

import socket
import subprocess
import sys
import time

import httpx
import pytest

from smoothmc import cli

from conftest import POISSON_SOURCE


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture(scope="module")
def server():
    port = _free_port()
    proc = subprocess.Popen(
        [sys.executable, "-m", "uvicorn", "smoothmc.service:app",
         "--host", "127.0.0.1", "--port", str(port), "--log-level", "error"],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    url = f"http://127.0.0.1:{port}"
    try:
        for _ in range(100):
            try:
                if httpx.get(url + "/health", timeout=1.0).status_code == 200:
                    break
            except httpx.HTTPError:
                time.sleep(0.1)
        else:
            pytest.skip("server did not come up")
        yield url
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def test_cli_estimate_against_live_server(server, tmp_path):
    model = tmp_path / "poisson.model"
    model.write_text(POISSON_SOURCE)
    prop = tmp_path / "p.mitl"
    prop.write_text("G[0,1] (N < 4)\n")

    argv = ["estimate", "--model", str(model), "--property", str(prop),
            "--param", "mu:0.5:5", "--train", "grid:5", "--runs", "2",
            "--predict", "6", "--kernel", "fixed:1:1", "--raw-units",
            "--seed", "21", "--threads", "1"]
    assert cli.main(argv + ["--out-prefix", str(tmp_path / "local")]) == 0
    assert cli.main(argv + ["--out-prefix", str(tmp_path / "remote"),
                            "--server", server]) == 0

    for kind in ("predictions", "training"):
        local = (tmp_path / f"local_{kind}.csv").read_bytes()
        remote = (tmp_path / f"remote_{kind}.csv").read_bytes()
        assert local == remote  # the HTTP hop must not change a byte


def test_cli_smc_against_live_server(server, tmp_path, capsys):
    model = tmp_path / "poisson.model"
    model.write_text(POISSON_SOURCE)
    prop = tmp_path / "p.mitl"
    prop.write_text("G[0,1] (N < 4)\n")
    code = cli.main(["smc", "--model", str(model), "--property", str(prop),
                     "--value", "mu=5.0", "--runs", "50", "--seed", "4",
                     "--server", server])
    assert code == 0
    assert '"trials": 50' in capsys.readouterr().out
