"""SVG emission: exact vector chords over the domain outline.

One <path> element per chord (or per polyline witness) and one for the
boundary; no raster plotting dependency.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

SVG_NS = "http://www.w3.org/2000/svg"


def _path_d(points: np.ndarray, close: bool = False) -> str:
    parts = [f"M {points[0][0]:.6f} {points[0][1]:.6f}"]
    parts.extend(f"L {x:.6f} {y:.6f}" for x, y in points[1:])
    if close:
        parts.append("Z")
    return " ".join(parts)


def _level_color(t: float, vmin: float, vmax: float) -> str:
    span = max(vmax - vmin, 1e-300)
    s = (t - vmin) / span
    r = int(40 + 180 * s)
    b = int(220 - 180 * s)
    return f"#{r:02x}40{b:02x}"


def render_family_svg(family, path, size: int = 640,
                      extra_polylines=None) -> None:
    """Write the family's level chords and domain outline as an SVG file.

    extra_polylines: optional list of (points, color) overlays, used for
    staircase witnesses.
    """
    x0, y0, x1, y1 = family.domain.bbox
    pad = 0.03 * max(x1 - x0, y1 - y0)
    x0, y0, x1, y1 = x0 - pad, y0 - pad, x1 + pad, y1 + pad
    scale = size / max(x1 - x0, y1 - y0)
    width = (x1 - x0) * scale
    height = (y1 - y0) * scale

    def to_px(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.empty_like(pts)
        out[:, 0] = (pts[:, 0] - x0) * scale
        out[:, 1] = (y1 - pts[:, 1]) * scale  # flip y for SVG coordinates
        return out

    ET.register_namespace("", SVG_NS)
    root = ET.Element(
        f"{{{SVG_NS}}}svg",
        {"width": f"{width:.0f}", "height": f"{height:.0f}",
         "viewBox": f"0 0 {width:.2f} {height:.2f}"},
    )
    thetas = np.linspace(0.0, 2.0 * np.pi, 720)
    outline = to_px(family.domain.point(thetas))
    ET.SubElement(root, f"{{{SVG_NS}}}path", {
        "d": _path_d(outline, close=True),
        "fill": "none", "stroke": "#202020", "stroke-width": "1.5",
        "class": "boundary",
    })
    for k, m in enumerate(family.matchings):
        color = _level_color(float(family.levels[k]), family.vmin, family.vmax)
        pts = family.domain.point(m.crossings.thetas)
        for i, j in m.pairs:
            key = (min(i, j), max(i, j))
            if m.paths and key in m.paths:
                seg = to_px(m.paths[key])
            else:
                seg = to_px([pts[i], pts[j]])
            ET.SubElement(root, f"{{{SVG_NS}}}path", {
                "d": _path_d(seg),
                "fill": "none", "stroke": color, "stroke-width": "0.7",
                "class": "chord",
            })
    for pts, color in (extra_polylines or []):
        ET.SubElement(root, f"{{{SVG_NS}}}path", {
            "d": _path_d(to_px(pts)),
            "fill": "none", "stroke": color, "stroke-width": "1.2",
            "stroke-dasharray": "4 3", "class": "witness",
        })
    ET.ElementTree(root).write(path, xml_declaration=True, encoding="unicode")
