"""Deterministic SVG rendering of roofline charts.

The renderer is a pure function of (report, spec): same input bytes in,
same SVG bytes out, every coordinate formatted to two decimals.  Dots
carry their source values as data attributes so tooling can inspect
them, but validate_geometry never trusts those: it recomputes every
coordinate from the report and compares against the rendered positions.

Both axes are logarithmic.  The ChartSpec ranges are a floor; when data
falls outside them the range grows outward to the next decade, so a
chart never silently drops a point.
"""

from __future__ import annotations

import hashlib
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .errors import DomainError, ValidationError
from .machine import MachineDescription
from .roofline import RooflinePoint, TrajectoryReport, all_points

_COORD_TOLERANCE_PX = 0.5


@dataclass(frozen=True)
class ChartSpec:
    """Geometry and axis floors for one rendering."""

    width: int = 960
    height: int = 640
    margin_left: int = 72
    margin_right: int = 168
    margin_top: int = 48
    margin_bottom: int = 56
    ai_min: float = 1e-2
    ai_max: float = 1e2
    flops_min: float = 1e10
    flops_max: float = 1e13
    dot_radius: float = 4.0
    label_offset: float = 4.0
    title: str | None = None

    def __post_init__(self) -> None:
        if self.ai_min <= 0 or self.flops_min <= 0:
            raise DomainError("log axes need positive minima")
        if self.ai_max <= self.ai_min or self.flops_max <= self.flops_min:
            raise DomainError("axis maxima must exceed their minima")


@dataclass(frozen=True)
class Mapper:
    """Log-log data-to-pixel transform for one chart instance."""

    spec: ChartSpec
    ai_min: float
    ai_max: float
    flops_min: float
    flops_max: float

    @classmethod
    def fit(cls, spec: ChartSpec, points: list[RooflinePoint]) -> "Mapper":
        """Expand the ChartSpec axis floors outward to whole decades covering the data."""
        ai_lo, ai_hi = spec.ai_min, spec.ai_max
        f_lo, f_hi = spec.flops_min, spec.flops_max
        for p in points:
            if p.ai <= 0 or p.throughput <= 0:
                raise DomainError(f"point {p.label!r} has non-positive coordinates")
            ai_lo = min(ai_lo, 10.0 ** math.floor(math.log10(p.ai)))
            ai_hi = max(ai_hi, 10.0 ** math.ceil(math.log10(p.ai)))
            f_lo = min(f_lo, 10.0 ** math.floor(math.log10(p.throughput)))
            f_hi = max(f_hi, 10.0 ** math.ceil(math.log10(p.throughput)))
        return cls(spec, ai_lo, ai_hi, f_lo, f_hi)

    @property
    def plot_left(self) -> float:
        return float(self.spec.margin_left)

    @property
    def plot_right(self) -> float:
        return float(self.spec.width - self.spec.margin_right)

    @property
    def plot_top(self) -> float:
        return float(self.spec.margin_top)

    @property
    def plot_bottom(self) -> float:
        return float(self.spec.height - self.spec.margin_bottom)

    def x(self, ai: float) -> float:
        span = math.log10(self.ai_max) - math.log10(self.ai_min)
        frac = (math.log10(ai) - math.log10(self.ai_min)) / span
        return self.plot_left + frac * (self.plot_right - self.plot_left)

    def y(self, flops: float) -> float:
        span = math.log10(self.flops_max) - math.log10(self.flops_min)
        frac = (math.log10(flops) - math.log10(self.flops_min)) / span
        return self.plot_bottom - frac * (self.plot_bottom - self.plot_top)


def color_for_label(label: str) -> str:
    """Stable per-label dot color from a hash of the label text."""
    digest = hashlib.md5(label.encode("utf-8")).hexdigest()
    hue = int(digest, 16) % 360
    return _hsl_to_hex(hue, 0.62, 0.42)


def _hsl_to_hex(hue: int, saturation: float, lightness: float) -> str:
    c = (1 - abs(2 * lightness - 1)) * saturation
    hp = hue / 60.0
    x = c * (1 - abs(hp % 2 - 1))
    r, g, b = (
        (c, x, 0.0) if hp < 1 else
        (x, c, 0.0) if hp < 2 else
        (0.0, c, x) if hp < 3 else
        (0.0, x, c) if hp < 4 else
        (x, 0.0, c) if hp < 5 else
        (c, 0.0, x)
    )
    m = lightness - c / 2
    return "#{:02x}{:02x}{:02x}".format(
        round((r + m) * 255), round((g + m) * 255), round((b + m) * 255)
    )


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _decade_label(exponent: int) -> str:
    if -2 <= exponent <= 3:
        return f"{10.0 ** exponent:g}"
    return f"1e{exponent}"


def _roof_segments(machine: MachineDescription, mapper: Mapper):
    """Clipped diagonal and horizontal roof segments in data space.

    Diagonals stop at their ridge with the highest ceiling; every
    ceiling extends from its ridge with the fastest level rightward.
    """
    peak = machine.default_ceiling().peak_flop_per_s
    diagonals = []
    for level in machine.levels:
        bw = level.bandwidth_bytes_per_s
        ai_lo = max(mapper.ai_min, mapper.flops_min / bw)
        ai_hi = min(mapper.ai_max, peak / bw)
        if ai_hi <= ai_lo:
            continue
        lo_clipped = max(ai_lo * bw, mapper.flops_min)
        hi_clipped = min(ai_hi * bw, mapper.flops_max)
        if hi_clipped <= lo_clipped:
            continue
        diagonals.append((level.name, lo_clipped / bw, hi_clipped / bw, bw))
    fastest = max(lv.bandwidth_bytes_per_s for lv in machine.levels)
    horizontals = []
    for ceiling in machine.ceilings:
        p = ceiling.peak_flop_per_s
        if not (mapper.flops_min <= p <= mapper.flops_max):
            continue
        ai_lo = max(mapper.ai_min, p / fastest)
        if ai_lo >= mapper.ai_max:
            continue
        horizontals.append((ceiling.label, ai_lo, mapper.ai_max, p))
    return diagonals, horizontals


def render_chart(report: TrajectoryReport, spec: ChartSpec = ChartSpec()) -> str:
    """Render a trajectory report as an SVG document string."""
    points = all_points(report)
    mapper = Mapper.fit(spec, points)
    machine = report.machine
    out: list[str] = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.width}" '
        f'height="{spec.height}" viewBox="0 0 {spec.width} {spec.height}">'
    )
    out.append(f'<rect width="{spec.width}" height="{spec.height}" fill="#ffffff"/>')
    out.append(
        f'<rect x="{_fmt(mapper.plot_left)}" y="{_fmt(mapper.plot_top)}" '
        f'width="{_fmt(mapper.plot_right - mapper.plot_left)}" '
        f'height="{_fmt(mapper.plot_bottom - mapper.plot_top)}" '
        f'fill="none" stroke="#222222" stroke-width="1"/>'
    )
    if spec.title:
        out.append(
            f'<text x="{_fmt((mapper.plot_left + mapper.plot_right) / 2)}" y="{_fmt(spec.margin_top - 16.0)}" '
            f'font-family="sans-serif" font-size="16" text-anchor="middle" fill="#111111">'
            f"{_escape(spec.title)}</text>"
        )

    # Decade grid and tick labels.
    k = math.ceil(math.log10(mapper.ai_min))
    while 10.0 ** k <= mapper.ai_max * (1 + 1e-12):
        gx = mapper.x(10.0 ** k)
        out.append(
            f'<line class="grid" x1="{_fmt(gx)}" y1="{_fmt(mapper.plot_top)}" '
            f'x2="{_fmt(gx)}" y2="{_fmt(mapper.plot_bottom)}" stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(gx)}" y="{_fmt(mapper.plot_bottom + 18.0)}" font-family="sans-serif" '
            f'font-size="12" text-anchor="middle" fill="#333333">{_decade_label(k)}</text>'
        )
        k += 1
    k = math.ceil(math.log10(mapper.flops_min))
    while 10.0 ** k <= mapper.flops_max * (1 + 1e-12):
        gy = mapper.y(10.0 ** k)
        out.append(
            f'<line class="grid" x1="{_fmt(mapper.plot_left)}" y1="{_fmt(gy)}" '
            f'x2="{_fmt(mapper.plot_right)}" y2="{_fmt(gy)}" stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(mapper.plot_left - 8.0)}" y="{_fmt(gy + 4.0)}" font-family="sans-serif" '
            f'font-size="12" text-anchor="end" fill="#333333">{_decade_label(k)}</text>'
        )
        k += 1
    out.append(
        f'<text x="{_fmt((mapper.plot_left + mapper.plot_right) / 2)}" '
        f'y="{_fmt(mapper.plot_bottom + 40.0)}" font-family="sans-serif" font-size="13" '
        f'text-anchor="middle" fill="#111111">arithmetic intensity (FLOP/byte)</text>'
    )
    out.append(
        f'<text x="18" y="{_fmt((mapper.plot_top + mapper.plot_bottom) / 2)}" '
        f'font-family="sans-serif" font-size="13" text-anchor="middle" fill="#111111" '
        f'transform="rotate(-90 18 {_fmt((mapper.plot_top + mapper.plot_bottom) / 2)})">'
        f"attained FLOP/s</text>"
    )

    diagonals, horizontals = _roof_segments(machine, mapper)
    for name, ai_lo, ai_hi, bw in diagonals:
        x1, y1 = mapper.x(ai_lo), mapper.y(ai_lo * bw)
        x2, y2 = mapper.x(ai_hi), mapper.y(ai_hi * bw)
        out.append(
            f'<line class="roof" data-level="{_escape(name)}" x1="{_fmt(x1)}" y1="{_fmt(y1)}" '
            f'x2="{_fmt(x2)}" y2="{_fmt(y2)}" stroke="#555555" stroke-width="1.5"/>'
        )
        out.append(
            f'<text class="roof-label" x="{_fmt(x2 - 4.0)}" y="{_fmt(y2 - 6.0)}" font-family="sans-serif" '
            f'font-size="12" text-anchor="end" fill="#555555">{_escape(name)}</text>'
        )
    for label, ai_lo, ai_hi, p in horizontals:
        x1, x2 = mapper.x(ai_lo), mapper.x(ai_hi)
        yy = mapper.y(p)
        out.append(
            f'<line class="ceiling" data-ceiling="{_escape(label)}" x1="{_fmt(x1)}" y1="{_fmt(yy)}" '
            f'x2="{_fmt(x2)}" y2="{_fmt(yy)}" stroke="#333333" stroke-width="1.5"/>'
        )
        out.append(
            f'<text class="ceiling-label" x="{_fmt(x1 + 6.0)}" y="{_fmt(yy - 6.0)}" font-family="sans-serif" '
            f'font-size="12" text-anchor="start" fill="#333333">{_escape(label)}</text>'
        )

    for p in points:
        cx, cy = mapper.x(p.ai), mapper.y(p.throughput)
        color = color_for_label(p.label)
        out.append(
            f'<circle class="dot" data-label="{_escape(p.label)}" data-level="{_escape(p.level)}" '
            f'data-ai="{p.ai!r}" data-throughput="{p.throughput!r}" '
            f'cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(spec.dot_radius)}" fill="{color}"/>'
        )
        out.append(
            f'<text class="dot-label" x="{_fmt(cx + spec.label_offset)}" '
            f'y="{_fmt(cy - spec.label_offset)}" font-family="sans-serif" font-size="11" '
            f'text-anchor="start" fill="{color}">{_escape(p.label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )


def validate_geometry(svg_text: str, report: TrajectoryReport, spec: ChartSpec = ChartSpec()) -> dict:
    """Re-derive every dot and roof position from the report and check the SVG.

    Raises ValidationError when any rendered coordinate is more than
    half a pixel from where the data says it belongs, or when the dot
    census disagrees with the report.  Returns a small summary.
    """
    points = all_points(report)
    mapper = Mapper.fit(spec, points)
    try:
        root = ET.fromstring(svg_text)
    except ET.ParseError as exc:
        raise ValidationError(f"chart is not well-formed XML: {exc}") from exc

    dots = []
    roof_lines = []
    ceiling_lines = []
    for el in root.iter():
        tag = el.tag.rsplit("}", 1)[-1]
        cls = el.get("class", "")
        if tag == "circle" and cls == "dot":
            dots.append(el)
        elif tag == "line" and cls == "roof":
            roof_lines.append(el)
        elif tag == "line" and cls == "ceiling":
            ceiling_lines.append(el)

    if len(dots) != len(points):
        raise ValidationError(
            f"chart has {len(dots)} dots but the report carries {len(points)} points"
        )
    max_err = 0.0
    for el, p in zip(dots, points):
        if el.get("data-label") != p.label or el.get("data-level") != p.level:
            raise ValidationError(
                f"dot order mismatch: expected {p.label}/{p.level}, "
                f"found {el.get('data-label')}/{el.get('data-level')}"
            )
        ex, ey = mapper.x(p.ai), mapper.y(p.throughput)
        dx = abs(float(el.get("cx")) - ex)
        dy = abs(float(el.get("cy")) - ey)
        if dx > _COORD_TOLERANCE_PX or dy > _COORD_TOLERANCE_PX:
            raise ValidationError(
                f"dot {p.label}/{p.level} rendered at ({el.get('cx')}, {el.get('cy')}), "
                f"expected ({ex:.3f}, {ey:.3f})"
            )
        max_err = max(max_err, dx, dy)

    diagonals, horizontals = _roof_segments(report.machine, mapper)
    if len(roof_lines) != len(diagonals) or len(ceiling_lines) != len(horizontals):
        raise ValidationError("roof segment census disagrees with the machine description")
    for el, (name, ai_lo, ai_hi, bw) in zip(roof_lines, diagonals):
        expected = (
            mapper.x(ai_lo), mapper.y(ai_lo * bw), mapper.x(ai_hi), mapper.y(ai_hi * bw)
        )
        got = tuple(float(el.get(k)) for k in ("x1", "y1", "x2", "y2"))
        if el.get("data-level") != name or any(
            abs(g - e) > _COORD_TOLERANCE_PX for g, e in zip(got, expected)
        ):
            raise ValidationError(f"roof segment for level {name!r} is misplaced")
    for el, (label, ai_lo, ai_hi, p) in zip(ceiling_lines, horizontals):
        expected = (mapper.x(ai_lo), mapper.y(p), mapper.x(ai_hi), mapper.y(p))
        got = tuple(float(el.get(k)) for k in ("x1", "y1", "x2", "y2"))
        if el.get("data-ceiling") != label or any(
            abs(g - e) > _COORD_TOLERANCE_PX for g, e in zip(got, expected)
        ):
            raise ValidationError(f"ceiling segment {label!r} is misplaced")
    return {
        "dots": len(dots),
        "roof_lines": len(roof_lines),
        "ceiling_lines": len(ceiling_lines),
        "max_dot_error_px": max_err,
    }
