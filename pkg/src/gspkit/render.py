"""SVG pictures of covering instances on a 16px unit grid."""

from __future__ import annotations

from .rcp import RcpInstance

UNIT = 16
MARGIN = 24


def render_svg(inst: RcpInstance, selection=None) -> str:
    """Rectangles as boxes (selected ones shaded), rays as downward arrows.

    Row j occupies [j, j+1) measured upward from the x-axis.  A ray at column
    t is drawn at t + 1/2 so it visibly passes through the rectangles it meets,
    starting half a unit above its top row s.
    """
    sel = set(selection or ())
    width = max([r.b for r in inst.rects] + [ray.t + 1 for ray in inst.rays] + [1])
    height = max([r.row + 1 for r in inst.rects] + [ray.s + 1 for ray in inst.rays] + [1])
    w_px = width * UNIT + 2 * MARGIN
    h_px = height * UNIT + 2 * MARGIN

    def X(x) -> float:
        return MARGIN + x * UNIT

    def Y(y) -> float:
        return MARGIN + (height - y) * UNIT

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w_px}" height="{h_px}" viewBox="0 0 {w_px} {h_px}">',
        '<defs><marker id="head" markerWidth="6" markerHeight="6" refX="3" refY="6" orient="auto">'
        '<path d="M0,0 L6,0 L3,6 z" fill="#c0392b"/></marker></defs>',
        f'<g id="axes" stroke="#000" stroke-width="1">'
        f'<line x1="{X(0)}" y1="{Y(0)}" x2="{X(width)}" y2="{Y(0)}"/>'
        f'<line x1="{X(0)}" y1="{Y(0)}" x2="{X(0)}" y2="{Y(height)}"/></g>',
    ]
    for r in sorted(inst.rects, key=lambda r: (r.row, r.a)):
        fill = "#7fb3d5" if r.id in sel else "none"
        cls = "rect selected" if r.id in sel else "rect"
        out.append(
            f'<rect class="{cls}" data-id="{r.id}" x="{X(r.a)}" y="{Y(r.row + 1)}" '
            f'width="{(r.b - r.a) * UNIT}" height="{UNIT}" fill="{fill}" stroke="#1f3a5f" stroke-width="1"/>'
        )
    for ray in sorted(inst.rays, key=lambda r: (r.t, r.s)):
        x = X(ray.t + 0.5)
        out.append(
            f'<line class="ray" x1="{x}" y1="{Y(ray.s + 1.5)}" x2="{x}" y2="{Y(0) - 6}" '
            f'stroke="#c0392b" stroke-width="1.5" marker-end="url(#head)"><title>d={ray.d}</title></line>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
