"""SVG rendering of solution documents."""

from __future__ import annotations

from xml.sax.saxutils import escape

PRIMAL_STYLE = 'fill="none" stroke="#1f4e9c"'
DUAL_STYLE = 'fill="none" stroke="#c0392b" stroke-opacity="0.8"'
OUTER_STYLE = 'fill="none" stroke="#c0392b"'
EDGE_STYLE = 'stroke="#777777"'

MARGIN = 0.05


def _num(v: float) -> str:
    return format(v, ".9g")


def _circle(c: dict, style: str, width: float, title: str | None = None) -> str:
    # the y axis points down in SVG, so mirror it
    body = (f'<circle cx="{_num(c["x"])}" cy="{_num(-c["y"])}" r="{_num(c["r"])}" '
            f'{style} stroke-width="{_num(width)}"')
    if title is None:
        return body + "/>"
    return body + f"><title>{title}</title></circle>"


def render_svg(solution: dict, duals: bool = True, edges: bool = False,
               size: int = 800) -> str:
    """Draw primal circles, and optionally dual circles and edges, as SVG 1.1.

    The view box covers every drawn circle plus a 5% margin on each side.
    """
    primal = solution.get("primal", [])
    dual = solution.get("dual", []) if duals else []
    outer = solution.get("outer_circle") if duals else None
    circles = primal + dual + ([outer] if outer else [])
    if not circles:
        raise ValueError("solution has no circles to draw")
    x0 = min(c["x"] - c["r"] for c in circles)
    x1 = max(c["x"] + c["r"] for c in circles)
    y0 = min(-c["y"] - c["r"] for c in circles)
    y1 = max(-c["y"] + c["r"] for c in circles)
    span = max(x1 - x0, y1 - y0)
    pad = MARGIN * span
    box = (x0 - pad, y0 - pad, x1 - x0 + 2 * pad, y1 - y0 + 2 * pad)
    width = span / 1000

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
        f'viewBox="{" ".join(_num(v) for v in box)}">',
    ]
    if edges:
        pos = {c["label"]: c for c in primal}
        pairs = solution.get("edges")
        if pairs is None:
            # pdpack solutions list faces, not edges: recover edges from them
            seen = set()
            pairs = []
            for d in solution.get("dual", []):
                face = d["face"]
                for a, b in zip(face, face[1:] + face[:1]):
                    key = (min(a, b), max(a, b))
                    if key not in seen:
                        seen.add(key)
                        pairs.append(key)
        out.append(f'<g {EDGE_STYLE} stroke-width="{_num(width)}">')
        for a, b in pairs:
            p, q = pos[a], pos[b]
            out.append(f'<line x1="{_num(p["x"])}" y1="{_num(-p["y"])}" '
                       f'x2="{_num(q["x"])}" y2="{_num(-q["y"])}"/>')
        out.append("</g>")
    out.append('<g id="primal">')
    out.extend(_circle(c, PRIMAL_STYLE, width, escape(c["label"])) for c in primal)
    out.append("</g>")
    if duals:
        out.append('<g id="dual">')
        out.extend(_circle(c, DUAL_STYLE, width) for c in dual)
        if outer:
            out.append(_circle(outer, OUTER_STYLE, 2 * width))
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
