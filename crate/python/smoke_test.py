"""Smoke test for the Python bindings.

Uses an installed ``toda_hbar`` module when present (``maturin develop`` in
``crates/python``); otherwise builds the extension with cargo and imports it
from a temporary directory.
"""

import importlib
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        return importlib.import_module("toda_hbar")
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "--release", "-p", "toda-hbar-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "libtoda_hbar_py.so"
    dest = pathlib.Path(tempfile.mkdtemp())
    shutil.copy(lib, dest / "toda_hbar.so")
    sys.path.insert(0, str(dest))
    return importlib.import_module("toda_hbar")


th = load()


def test_symbols():
    cfg = th.Config(n_hbar=2, xi_hi=3, t_deg=1)
    xi = th.Symbol.parse("E", cfg)
    s = th.Symbol.parse("s", cfg)
    assert str(xi.commutator(s)) == str(xi)
    assert (xi * s - s * xi) == th.Symbol.parse("hbar*E", cfg)


def test_string_preset():
    sol = th.solve_preset("c1-string", th.Config(n_hbar=2, xi_hi=3, t_deg=1))
    triple = sol.triple
    assert triple.x(1).is_zero()
    assert triple.phi(1) == "1/2*l"
    assert all(ok for _, ok, _ in sol.verify())
    f = triple.free_energies()
    assert f[1] == "0" and f[2] == "-1/12*l"
    again = th.Triple.from_json(triple.to_json())
    assert again.to_json() == triple.to_json()


def test_expressions_and_errors():
    cfg = th.Config(n_hbar=1, xi_hi=3, t_deg=1)
    sol = th.solve(
        "E", "s", "(1 - s - hbar)*E", "s", "0",
        "t[1]*(1 - s)*E + t[2]*(1 - s)^2*E^2 + t[3]*(1 - s)^3*E^3",
        "(1 - s) - (1 - s)*log(1 - s)",
        cfg,
    )
    assert sol.triple.phi(1) == "1/2*l"
    for bad in ["(s", "E^9"]:
        try:
            th.Symbol.parse(bad, cfg)
        except ValueError:
            continue
        raise AssertionError(bad)


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print("ok", name)
