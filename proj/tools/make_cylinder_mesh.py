#!/usr/bin/env python3
"""Generate meshes/cylinder_channel.msh (MSH 2.2 ASCII).

Flow-past-a-cylinder benchmark geometry: channel [0, 2.2] x [0, 0.41] m
with a circular obstacle of diameter 0.1 m centered at (0.2, 0.2).
The construction is fully deterministic: an exact point ring on the
circle, a few graded rings around it, a graded hexagonal background
lattice thinned by a spatial-hash minimum-distance rule, and a Delaunay
triangulation with the cylinder interior removed.

Boundary region tags:
  1 inlet  (x = 0)        2 outlet (x = 2.2)
  3 walls  (y = 0, 0.41)  5 cylinder surface

Requires numpy + scipy. The generated file is checked into the
repository; rerunning this script reproduces it bit for bit.
"""

import math
import sys

import numpy as np
from scipy.spatial import Delaunay

W, H = 2.2, 0.41
CX, CY, R = 0.2, 0.2, 0.05

H_NEAR = 0.0060   # target spacing at the cylinder surface
H_WAKE = 0.013    # inside the wake box
H_FAR = 0.026     # far field
GROWTH = 0.42     # spacing growth per unit distance from the cylinder


def spacing(x, y):
    d = math.hypot(x - CX, y - CY) - R
    h = H_NEAR + GROWTH * max(d, 0.0)
    if 0.12 <= x <= 1.30 and abs(y - CY) <= 0.115:
        h = min(h, H_WAKE)
    return min(h, H_FAR)


def graded_1d(segments):
    """Concatenate arange segments [(start, stop, step), ...] plus the
    final stop; returns strictly increasing coordinates."""
    xs = []
    for start, stop, step in segments:
        n = max(1, round((stop - start) / step))
        xs.extend(start + (stop - start) * k / n for k in range(n))
    xs.append(segments[-1][1])
    return xs


def boundary_points():
    pts = []
    # bottom and top, refined where the cylinder narrows the channel
    xs = graded_1d([(0.0, 0.06, 0.015), (0.06, 0.55, 0.010),
                    (0.55, 1.30, 0.016), (1.30, 2.2, 0.024)])
    for x in xs:
        pts.append((x, 0.0))
        pts.append((x, H))
    # inlet and outlet, corners already present
    n = 20
    for k in range(1, n):
        y = H * k / n
        pts.append((0.0, y))
        pts.append((W, y))
    return pts


def circle_points():
    n = 64
    return [(CX + R * math.cos(2 * math.pi * k / n),
             CY + R * math.sin(2 * math.pi * k / n)) for k in range(n)]


def ring_points():
    pts = []
    for factor in (1.17, 1.38, 1.63, 1.93):
        r = R * factor
        h = H_NEAR + GROWTH * (r - R)
        n = max(8, round(2 * math.pi * r / h))
        # stagger consecutive rings by half a step
        phase = 0.5 * (factor > 1.3)
        for k in range(n):
            a = 2 * math.pi * (k + phase) / n
            x, y = CX + r * math.cos(a), CY + r * math.sin(a)
            if 0.0 < y < H:
                pts.append((x, y))
    return pts


class Hash2D:
    """Spatial hash answering 'any accepted point within r of (x, y)?'."""

    def __init__(self, cell):
        self.cell = cell
        self.grid = {}

    def key(self, x, y):
        return (int(math.floor(x / self.cell)), int(math.floor(y / self.cell)))

    def insert(self, x, y):
        self.grid.setdefault(self.key(x, y), []).append((x, y))

    def near(self, x, y, r):
        ci, cj = self.key(x, y)
        rr = r * r
        reach = int(math.ceil(r / self.cell))
        for i in range(ci - reach, ci + reach + 1):
            for j in range(cj - reach, cj + reach + 1):
                for (px, py) in self.grid.get((i, j), ()):
                    if (px - x) ** 2 + (py - y) ** 2 < rr:
                        return True
        return False


def build_cloud():
    fixed = boundary_points() + circle_points()
    accepted = list(fixed) + []
    hash2d = Hash2D(H_FAR)
    for (x, y) in accepted:
        hash2d.insert(x, y)

    for (x, y) in ring_points():
        h = spacing(x, y)
        if hash2d.near(x, y, 0.62 * h):
            continue
        if y < 0.45 * h or y > H - 0.45 * h:
            continue
        accepted.append((x, y))
        hash2d.insert(x, y)

    # hexagonal candidate lattice at the finest scale, thinned locally
    dy = H_NEAR * math.sqrt(3) / 2
    rows = int(H / dy) + 1
    cols = int(W / H_NEAR) + 1
    for j in range(rows):
        y = j * dy
        off = 0.5 * H_NEAR * (j % 2)
        for i in range(cols):
            x = i * H_NEAR + off
            if not (0 < x < W and 0 < y < H):
                continue
            h = spacing(x, y)
            margin_rect = min(x, W - x, y, H - y)
            if margin_rect < 0.5 * h:
                continue
            if math.hypot(x - CX, y - CY) - R < 0.55 * h:
                continue
            if hash2d.near(x, y, 0.70 * h):
                continue
            accepted.append((x, y))
            hash2d.insert(x, y)
    return np.array(accepted)


def on_circle(p):
    return abs(math.hypot(p[0] - CX, p[1] - CY) - R) < 1e-9


def classify_edge(pa, pb):
    if abs(pa[0]) < 1e-9 and abs(pb[0]) < 1e-9:
        return 1
    if abs(pa[0] - W) < 1e-9 and abs(pb[0] - W) < 1e-9:
        return 2
    if (abs(pa[1]) < 1e-9 and abs(pb[1]) < 1e-9) or \
       (abs(pa[1] - H) < 1e-9 and abs(pb[1] - H) < 1e-9):
        return 3
    if on_circle(pa) and on_circle(pb):
        return 5
    return None


def main(path):
    pts = build_cloud()
    tri = Delaunay(pts)

    keep = []
    for simplex in tri.simplices:
        c = pts[simplex].mean(axis=0)
        if math.hypot(c[0] - CX, c[1] - CY) > R:
            keep.append(simplex)
    keep = np.array(keep)

    # mesh quality report
    areas, angles = [], []
    for s in keep:
        a, b, c = pts[s]
        ab, ac, bc = b - a, c - a, c - b
        area = 0.5 * abs(ab[0] * ac[1] - ab[1] * ac[0])
        areas.append(area)
        for u, v in ((ab, ac), (-ab, bc), (-ac, -bc)):
            cosv = np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v))
            angles.append(math.degrees(math.acos(max(-1.0, min(1.0, cosv)))))
    print(f"nodes {len(pts)}  cells {len(keep)}  "
          f"min area {min(areas):.3e}  min angle {min(angles):.2f} deg")
    assert min(areas) > 1e-9, "degenerate triangle produced"
    assert min(angles) > 10.0, "sliver triangle produced"

    # boundary edges = edges used by exactly one kept triangle
    count = {}
    for s in keep:
        for e in ((s[0], s[1]), (s[1], s[2]), (s[2], s[0])):
            count[tuple(sorted(e))] = count.get(tuple(sorted(e)), 0) + 1
    boundary = [e for e, n in count.items() if n == 1]

    facets = []
    for (i, j) in sorted(boundary):
        tag = classify_edge(pts[i], pts[j])
        assert tag is not None, f"unclassified boundary edge {pts[i]} {pts[j]}"
        facets.append((tag, i, j))

    used = sorted({i for s in keep for i in s} | {i for (_, i, j) in facets}
                  | {j for (_, i, j) in facets})
    assert len(used) == len(pts), "orphan points in the cloud"

    with open(path, "w") as out:
        out.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        out.write(f"$Nodes\n{len(pts)}\n")
        for k, (x, y) in enumerate(pts, start=1):
            out.write(f"{k} {x:.16g} {y:.16g} 0\n")
        out.write("$EndNodes\n")
        out.write(f"$Elements\n{len(facets) + len(keep)}\n")
        eid = 1
        for (tag, i, j) in facets:
            out.write(f"{eid} 1 2 {tag} {tag} {i + 1} {j + 1}\n")
            eid += 1
        for s in keep:
            out.write(f"{eid} 2 2 0 0 {s[0] + 1} {s[1] + 1} {s[2] + 1}\n")
            eid += 1
        out.write("$EndElements\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "meshes/cylinder_channel.msh")
