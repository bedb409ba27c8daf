"""Small hand-built Cech complexes: topology you can check by eye.

Three exhibits:

1. An equilateral triangle whose edges are present but whose triangle is
   not: the Cech complex is strictly smaller than the flag (clique)
   complex of its edge graph.
2. A six-point complex (a filled triangle sharing a vertex with a hollow
   diamond) with Euler characteristic 0 and Betti numbers (1, 1).
3. The regular octahedron just past its covering radius: a triangulated
   sphere, Betti numbers (1, 0, 1).

Run:  python3 demos/02_cech_versus_flag.py
"""

import math

import numpy as np

from randcech.cech import betti_numbers, build_cech, euler_characteristic


def show(name, points, eps, max_dim=None):
    cx = build_cech(points, eps)
    betti = betti_numbers(cx, max_dim=max_dim)
    print(f"{name} (eps={eps:.4g})")
    print(f"  simplex counts: {cx.counts()}")
    print(f"  euler characteristic: {euler_characteristic(cx)}")
    print(f"  betti numbers: {betti}\n")
    return cx


def main() -> None:
    side = 1.0
    tri = np.array([[0.0, 0.0], [side, 0.0], [side / 2, side * math.sqrt(3) / 2]])
    eps = 0.55  # > side/2 so edges appear, < circumradius 1/sqrt(3) = 0.577
    cx = show("equilateral triangle, hollow", tri, eps, max_dim=1)
    assert list(cx.counts()) == [3, 3], "edges present, triangle absent"
    print("  every pair is within 2*eps yet the three balls have no common")
    print("  point: the Cech complex is NOT the flag complex of its graph.\n")

    # filled triangle a,b,c plus a hollow diamond hanging off vertex c
    t, s = 0.5, 0.55
    u = s * math.sqrt(2) / 2
    c = np.array([0.0, t * math.sqrt(3) / 2])
    pts = np.array([
        [-t / 2, 0.0], [t / 2, 0.0], c,
        c + [-u, u], c + [0.0, 2 * u], c + [u, u],
    ])
    show("triangle + diamond cycle", pts, 0.3)

    octa = np.array([
        [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1],
    ], dtype=float)
    show("octahedron (a sphere)", octa, math.sqrt(2.0 / 3.0) + 1e-9)


if __name__ == "__main__":
    main()
