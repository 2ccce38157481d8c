#!/usr/bin/env python3
"""Smoke test for the mixedvol_py extension module.

Builds are produced by `cargo build -p mixedvol-py` (or `--release`); this
script locates the compiled cdylib, exposes it under the importable module
name, and exercises the bound API end to end.  Exit code 0 means every check
passed.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libmixedvol_py.so", "mixedvol_py.so", "libmixedvol_py.dylib")
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit(
            "no compiled extension found; run `cargo build -p mixedvol-py` first"
        )
    newest = max(built, key=lambda p: p.stat().st_mtime)
    stage = Path(tempfile.mkdtemp(prefix="mixedvol-py-"))
    shutil.copy2(newest, stage / "mixedvol_py.so")
    sys.path.insert(0, str(stage))
    import mixedvol_py

    return mixedvol_py


checks = 0


def check(cond, msg):
    global checks
    if not cond:
        sys.exit(f"FAIL: {msg}")
    checks += 1


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main():
    global checks
    mv = load_module()

    # --- bodies -----------------------------------------------------------
    square = mv.ConvexBody.box_body([0.0, 0.0], [1.0, 1.0])
    check(square.dim == 2 and square.affine_dim == 2, "unit square dimensions")
    check(close(square.volume(), 1.0), "unit square volume")
    check(close(square.scale(2.0).volume(), 4.0), "scaled square volume")
    check(close(square.translate([5.0, -1.0]).volume(), 1.0), "translation keeps volume")

    seg = mv.ConvexBody.segment([0.0, 0.0], [1.0, 1.0])
    check(seg.affine_dim == 1 and close(seg.volume(), 0.0), "segment is flat")

    zono = mv.ConvexBody.zonotope([0.0, 0.0], [[1.0, 0.0], [1.0, 1.0]])
    check(close(zono.volume(), 1.0), "zonotope volume = |det of generators|")

    tri = mv.ConvexBody.vpolytope([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    check(close(tri.volume(), 0.5), "triangle volume")

    try:
        mv.ConvexBody.box_body([0.0], [1.0, 2.0])
        sys.exit("FAIL: mismatched box bounds should raise")
    except ValueError:
        checks += 1

    # --- tuples and mixed volumes ----------------------------------------
    squares = mv.BodyTuple([square, square])
    check(squares.n == 2 and len(squares.bodies) == 2, "tuple arity")
    value, method = squares.mixed_volume()
    check(close(value, 2.0), "mixed volume of two unit squares (n!-scaled)")
    check(method == "permanent", f"box tuples use the permanent oracle, got {method}")
    check(close(squares.volume_poly([1.0, 1.0]), 4.0), "volume polynomial at (1,1)")

    check(close(mv.mixed_volume_segments([[1.0, 0.0], [0.0, 1.0]]), 1.0), "segment determinant")
    check(close(mv.permanent([[1.0, 2.0], [3.0, 4.0]]), 10.0), "permanent via Ryser")

    # --- capacity relaxation ---------------------------------------------
    report = squares.capacity(epsilon=1e-4, seed=7)
    check(close(report["cap_estimate"], 4.0, 1e-3), "capacity of the square pair")
    hi = report["mv_upper"] * math.exp(report["additive_gap"])
    check(report["mv_lower"] <= 2.0 + 1e-9 <= hi + 1e-9, "bracket contains the mixed volume")
    check(report["certified"], "exact-oracle run is certified")
    check(report["oracle_mode"] == "exact", "oracle mode string")
    rerun = squares.capacity(epsilon=1e-4, seed=7)
    check(rerun == report, "identical seed and config reproduce the report")

    noisy = squares.capacity(epsilon=0.05, mode="mc", samples=2000, seed=1)
    check(noisy["oracle_mode"] == "mc(2000)", "sampled oracle is recorded")

    try:
        squares.capacity(epsilon=2.0)
        sys.exit("FAIL: epsilon outside (0,1) should raise")
    except ValueError:
        checks += 1

    # --- decomposition and zero certificates -----------------------------
    e1 = mv.ConvexBody.segment([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])
    e2 = mv.ConvexBody.segment([0.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    e3 = mv.ConvexBody.segment([0.0, 0.0, 0.0], [0.0, 0.0, 1.0])
    axes = mv.BodyTuple([e1, e2, e3])
    dec = axes.decompose()
    check(len(dec["blocks"]) == 3, "axis segments split into singleton blocks")
    check(dec["zero_certificate"] is None, "full tuple has no zero certificate")
    check(close(axes.mixed_volume()[0], 1.0), "axis-segment mixed volume")

    parallel = mv.BodyTuple(
        [
            mv.ConvexBody.segment([0.0, 0.0], [1.0, 0.0]),
            mv.ConvexBody.segment([0.0, 0.0], [2.0, 0.0]),
        ]
    )
    pdec = parallel.decompose()
    check(pdec["zero_certificate"] == [0, 1], "parallel segments are certified zero")
    zero_report = parallel.capacity()
    check(
        zero_report["mv_upper"] == 0.0 and zero_report["zero_certificate"] == [0, 1],
        "capacity short-circuits on the zero certificate",
    )

    # --- JSON interop -----------------------------------------------------
    text = squares.to_json()
    parsed, labels = mv.BodyTuple.from_json(text)
    check(labels == ["K1", "K2"], "default labels")
    check(close(parsed.mixed_volume()[0], 2.0), "JSON round trip preserves the tuple")
    check(
        mv.content_hash(b"abc")
        == "c1cf6e465077930e88dc5136641d402f72a229ddd996f627d60e9639eaba35a6",
        "content hash matches the CLI input_sha256 convention",
    )

    # --- lattice degrees --------------------------------------------------
    nd = squares.newton_degrees()
    check(nd["degrees"] == [2, 2] and close(nd["product_bound"], 4.0), "degree profile")

    # --- closed-form factors ---------------------------------------------
    check(close(mv.vdw_factor(3), 6.0 / 27.0), "factorial ratio n=3")
    check(close(mv.g_factor(2), 0.5) and close(mv.g_factor(3), 4.0 / 9.0), "g factors")
    check(close(mv.lambda_factor(5, 2), 0.441518440112253), "lambda(5,2) closed form")
    check(
        mv.vdw_factor(5) <= mv.schrijver_factor(5, 2) <= mv.lambda_factor(5, 2) ** 3,
        "factor ordering",
    )
    check(close(mv.unit_ball_volume(2), math.pi), "disk area")

    # --- scaling ----------------------------------------------------------
    uneven = mv.BodyTuple(
        [
            mv.ConvexBody.box_body([0.0, 0.0], [2.0, 1.0]),
            mv.ConvexBody.box_body([0.0, 0.0], [1.0, 3.0]),
        ]
    )
    sk = uneven.sinkhorn(x0=[3.0, 0.25], iterations=200, epsilon=1e-7)
    check(sk["converged"], "Sinkhorn scaling converges")
    check(sk["max_gamma_gap"] <= 1e-7, "scaled point is doubly balanced")
    traj = sk["f_trajectory"]
    check(all(b <= a * (1 + 1e-9) for a, b in zip(traj, traj[1:])), "objective is monotone")

    # --- mixed discriminants ---------------------------------------------
    eye3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    check(close(mv.mixed_discriminant([eye3, eye3, eye3]), 6.0), "identity discriminant = n!")
    drep = mv.discriminant_capacity([eye3, eye3, eye3], epsilon=1e-6, seed=3)
    check(close(drep["cap_estimate"], 27.0, 1e-3), "determinant capacity of identities")
    check(drep["mv_lower"] <= 6.0 + 1e-6, "capacity bracket covers the discriminant")

    eye2 = [[1.0, 0.0], [0.0, 1.0]]
    lo, hi = mv.ellipsoid_bracket([eye2, eye2])
    check(close(hi, 2.0 * math.pi), "ellipsoid bracket upper end for two disks")
    check(close(lo, 2.0 * math.pi * 3.0 ** -1.5), "ellipsoid bracket lower end")

    degenerate = [[1.0, 0.0], [0.0, 0.0]]
    try:
        mv.discriminant_capacity([degenerate, degenerate])
        sys.exit("FAIL: decomposable tuple should raise")
    except RuntimeError:
        checks += 1

    print(f"smoke test passed ({checks} checks)")


if __name__ == "__main__":
    main()
