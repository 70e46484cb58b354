#!/usr/bin/env python3
"""Smoke test for the pcurve_py extension module.

Builds nothing itself: it locates the compiled cdylib under target/ (run
`cargo build -p pcurve-python` first, or `--release`), stages it under a
temporary directory with the importable name, and drives the main entry
points end to end.
"""

import json
import shutil
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def stage_module() -> None:
    candidates = [
        ROOT / "target" / "release" / "libpcurve_py.so",
        ROOT / "target" / "debug" / "libpcurve_py.so",
        ROOT / "target" / "release" / "pcurve_py.dll",
        ROOT / "target" / "debug" / "pcurve_py.dll",
        ROOT / "target" / "release" / "libpcurve_py.dylib",
        ROOT / "target" / "debug" / "libpcurve_py.dylib",
    ]
    built = next((c for c in candidates if c.exists()), None)
    if built is None:
        sys.exit("build the extension first: cargo build -p pcurve-python")
    stage = Path(tempfile.mkdtemp(prefix="pcurve-py-"))
    suffix = ".pyd" if built.suffix == ".dll" else ".so"
    shutil.copy2(built, stage / f"pcurve_py{suffix}")
    sys.path.insert(0, str(stage))


stage_module()

import pcurve_py  # noqa: E402

TRIANGLE = json.dumps(
    {
        "p": 5,
        "shorts": [
            {"id": "s1", "genus": 4, "slope_one_dim": 2},
            {"id": "s2", "genus": 0, "slope_one_dim": 0},
            {"id": "s3", "genus": 3, "slope_one_dim": 1},
        ],
        "legs": [
            {"id": "a1", "tail": "s1", "head": "s2", "length": "1"},
            {"id": "a2", "tail": "s2", "head": "s3", "length": "1"},
            {"id": "a3", "tail": "s3", "head": "s1", "length": "1"},
        ],
        "punctures": [
            {"id": "a4", "vertex": "s3"},
            {"id": "a5", "vertex": "s3"},
        ],
    }
)

THREE_CYCLE = json.dumps(
    {
        "vertices": [{"id": "s1"}, {"id": "s2"}, {"id": "s3"}],
        "edges": [
            {"id": "a1", "tail": "s1", "head": "s2", "length": "1"},
            {"id": "a2", "tail": "s2", "head": "s3", "length": "1"},
            {"id": "a3", "tail": "s3", "head": "s1", "length": "1"},
        ],
    }
)


def check(name, got, want):
    assert got == want, f"{name}: expected {want!r}, got {got!r}"
    print(f"ok {name}: {got!r}")


# Patron pipeline.
pat = pcurve_py.Patron.from_json(TRIANGLE)
check("validate", pat.validate(), [])
check("genus", pat.genus(), 8)

etale = pat.filtration_report("etale:7")
check("etale pieces", [p["dimension"] for p in etale["pieces"]], [1, 14, 2])
check("etale total", etale["total"], 17)

hk = pat.filtration_report("hk")
check("hk pieces", [p["dimension"] for p in hk["pieces"]], [0, 9, 2])
check(
    "hk slopes (middle)",
    hk["pieces"][1]["slopes"],
    [
        {"slope": "0", "multiplicity": 2},
        {"slope": "(0,1)", "multiplicity": 4},
        {"slope": "1", "multiplicity": 3},
    ],
)

stable = pat.stabilize()
fused = [p for p in stable["marked_points"] if p["multiplicity"] == "2"]
check("fused node count", len(fused), 1)
check("fused node incidences", sorted(fused[0]["incident"]), ["s1", "s3"])

refined = pat.refine_leg("a2", "1/3")
check("refined genus", refined.genus(), 8)
check(
    "refined etale pieces",
    [p["dimension"] for p in refined.filtration_report("etale:7")["pieces"]],
    [1, 14, 2],
)

# Graph pipeline.
g = pcurve_py.Graph.from_json(THREE_CYCLE)
coh = g.cohomology("Q")
check("3-cycle h1", coh["h1"], 1)
check("3-cycle h1c_dual", coh["h1c_dual"], 1)
check("exact sequence", g.exact_sequence_check(), True)
check("3-cycle monodromy", g.monodromy_matrix("Q"), [["3"]])
check("subdivision h1", g.subdivide().cohomology("Q")["h1"], 1)
check("Z/4 torsion", g.cohomology("Z/4")["h1c_torsion"], ["4"])

delta = pat.picard_lefschetz_delta("2", ["1", "1", "1", "0", "0"])
check("picard-lefschetz class", delta, ["6"])

# Series engine.
factored = pcurve_py.series_factor(5, "1:1,0:5", nmin=-8, nmax=8)
check("factor c", factored["c"], "1")
check("factor k", factored["k"], 1)
check("factor u_minus", factored["u_minus"]["coeffs"], {"0": "1", "-1": "5"})

dlog = pcurve_py.series_dlog(5, "1:1,0:5", nmin=-12, nmax=12)
check("dlog residue", dlog["residue"], "1")

res = pcurve_py.series_residue(5, "1:2,0:5,-1:15", nmin=-8, nmax=8)
check("residue", res["residue"], "5")

leg = pcurve_py.series_leg(5, "1:1,0:25", mu="3/2", side=2, ram=2, nmin=-8, nmax=8)
check("leg newton v", Fraction(leg["newton"]["v"]), Fraction(3, 2))
check("leg newton v'", leg["newton"]["v_prime"], -1)

print("smoke test passed")
