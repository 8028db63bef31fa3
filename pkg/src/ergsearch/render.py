"""Static SVG overlays: map heatmap, start regions, trajectories.

Output is plain hand-assembled SVG text with fixed-precision numbers,
so identical inputs produce identical bytes.
"""

import numpy as np

from .maps import GridMap, StartRegionSet

# dark-purple to yellow anchors, interpolated linearly
_HEAT_ANCHORS = (
    (68, 1, 84),
    (59, 82, 139),
    (33, 145, 140),
    (94, 201, 98),
    (253, 231, 37),
)

_TYPE_COLORS = ("#e41a1c", "#377eb8", "#4daf4a", "#984ea3")

_CANVAS_WIDTH = 640


def _heat_color(t: float) -> str:
    t = min(max(float(t), 0.0), 1.0)
    pos = t * (len(_HEAT_ANCHORS) - 1)
    i = min(int(pos), len(_HEAT_ANCHORS) - 2)
    frac = pos - i
    lo, hi = _HEAT_ANCHORS[i], _HEAT_ANCHORS[i + 1]
    rgb = tuple(round(a + frac * (b - a)) for a, b in zip(lo, hi))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _fmt(x: float) -> str:
    return f"{float(x):.5f}"


def type_color(type_ids, type_id) -> str:
    order = sorted(type_ids)
    return _TYPE_COLORS[order.index(type_id) % len(_TYPE_COLORS)]


def render_svg(
    grid_map: GridMap,
    regions: StartRegionSet,
    solution,
    path,
    agent_type_ids=None,
) -> None:
    """Write an SVG overlay; pass solution=None for map and regions only.

    agent_type_ids colors each trajectory by its agent's type; omitted,
    every agent is drawn in the first type's color.
    """
    l1, l2 = (float(v) for v in grid_map.domain_lengths)
    height = round(_CANVAS_WIDTH * l2 / l1)
    unit = min(l1, l2)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_CANVAS_WIDTH}" '
        f'height="{height}" viewBox="0 0 {_fmt(l1)} {_fmt(l2)}">'
    ]

    cells = grid_map.cells
    vmin, vmax = float(cells.min()), float(cells.max())
    spread = vmax - vmin
    cw, ch = l1 / grid_map.nx, l2 / grid_map.ny
    # slight overdraw hides hairline seams between cells
    w_attr, h_attr = _fmt(cw * 1.002), _fmt(ch * 1.002)
    for iy in range(grid_map.ny):
        y = l2 - (iy + 1) * ch  # map y axis points up, svg y points down
        row = cells[iy]
        for ix in range(grid_map.nx):
            t = 0.5 if spread <= 0 else (float(row[ix]) - vmin) / spread
            parts.append(
                f'<rect x="{_fmt(ix * cw)}" y="{_fmt(y)}" width="{w_attr}" '
                f'height="{h_attr}" fill="{_heat_color(t)}"/>'
            )

    dash = f"{_fmt(0.02 * unit)} {_fmt(0.012 * unit)}"
    for tid in regions.type_ids:
        color = type_color(regions.type_ids, tid)
        for r in regions.regions[tid]:
            parts.append(
                f'<rect x="{_fmt(r.xmin)}" y="{_fmt(l2 - r.ymax)}" '
                f'width="{_fmt(r.xmax - r.xmin)}" height="{_fmt(r.ymax - r.ymin)}" '
                f'fill="none" stroke="{color}" '
                f'stroke-width="{_fmt(0.006 * unit)}" '
                f'stroke-dasharray="{dash}"/>'
            )

    if solution is not None:
        type_ids = regions.type_ids
        if agent_type_ids is None:
            agent_type_ids = [type_ids[0]] * len(solution.trajectories)
        for traj, start, tid in zip(
            solution.trajectories, solution.starts, agent_type_ids
        ):
            color = type_color(type_ids, tid)
            pts = " ".join(
                f"{_fmt(p[0])},{_fmt(l2 - p[1])}"
                for p in np.asarray(traj.positions)
            )
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" '
                f'stroke-width="{_fmt(0.008 * unit)}" stroke-opacity="0.85"/>'
            )
            parts.append(
                f'<circle cx="{_fmt(start[0])}" cy="{_fmt(l2 - start[1])}" '
                f'r="{_fmt(0.015 * unit)}" fill="{color}" stroke="#ffffff" '
                f'stroke-width="{_fmt(0.004 * unit)}"/>'
            )

    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
