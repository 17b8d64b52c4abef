# This file is part of shrinkerlab.
#
# Copyright 2022 the shrinkerlab authors
#
# Shrinkerlab is free software: you can redistribute it and/or modify it
# under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# Shrinkerlab is distributed in the hope that it will be useful, but
# WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the GNU
# General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with shrinkerlab. If not, see <https://www.gnu.org/licenses/>.

"""SVG figures of profile curves and diagnostic series."""

import numpy as np
from lxml import etree
from typing import List, Optional, Sequence, Tuple
from .io import atomic_write
from .profile import ProfileCurve

SVG_NS = 'http://www.w3.org/2000/svg'
PALETTE = ('#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b')
WIDTH = 640
HEIGHT = 400
MARGIN = 40


def _fmt(value):
    return '%.3f' % value


def _style(styles, k):
    style = {
        'color': PALETTE[k % len(PALETTE)],
        'width': 1.5,
        'label': f'curve {k}',
        'dash': None,
    }
    if styles is not None and k < len(styles) and styles[k]:
        style.update(styles[k])
    return style


def _svg_root():
    return etree.Element(f'{{{SVG_NS}}}svg', nsmap={None: SVG_NS},
                         width=str(WIDTH), height=str(HEIGHT),
                         viewBox=f'0 0 {WIDTH} {HEIGHT}')


def _sub(parent, tag, **attrib):
    element = etree.SubElement(parent, f'{{{SVG_NS}}}{tag}')
    for key, value in attrib.items():
        element.set(key.replace('_', '-'), value)
    return element


def _line(parent, p, q, stroke='#000000', width=1.0):
    return _sub(parent, 'line', x1=_fmt(p[0]), y1=_fmt(p[1]), x2=_fmt(q[0]),
                y2=_fmt(q[1]), stroke=stroke, stroke_width=_fmt(width))


def _text(parent, p, label, anchor='start'):
    element = _sub(parent, 'text', x=_fmt(p[0]), y=_fmt(p[1]),
                   font_size='12', font_family='sans-serif', text_anchor=anchor)
    element.text = label
    return element


def _legend(root, styles):
    legend = _sub(root, 'g', **{'class': 'legend'})
    for k, style in enumerate(styles):
        y = MARGIN + 16 * k
        x = WIDTH - MARGIN - 120
        sample = _line(legend, (x, y), (x + 20, y), stroke=style['color'],
                       width=style['width'])
        if style['dash']:
            sample.set('stroke-dasharray', style['dash'])
        _text(legend, (x + 26, y + 4), style['label'])


def _finish(root, out_path):
    svg = etree.tostring(root, xml_declaration=True, encoding='UTF-8', pretty_print=True)
    if out_path is not None:
        atomic_write(out_path, svg.decode('utf-8'))
    return svg


def render_profile_svg(curves: Sequence[ProfileCurve], out_path=None,
                       styles: Optional[List[dict]] = None) -> bytes:
    """Draw profile curves to scale in the (x, r) half-plane.

    styles is a list of dicts with optional keys color, width, label and
    dash, one per curve.
    """
    if not curves:
        raise ValueError('Nothing to draw')

    nodes = np.vstack([c.nodes for c in curves])
    x_lo, x_hi = nodes[:, 0].min(), nodes[:, 0].max()
    r_hi = nodes[:, 1].max()
    span_x = max(x_hi - x_lo, 1e-12)
    scale = min((WIDTH - 2 * MARGIN) / span_x, (HEIGHT - 2 * MARGIN) / max(r_hi, 1e-12))

    def to_canvas(x, r):
        return MARGIN + (x - x_lo) * scale, HEIGHT - MARGIN - r * scale

    root = _svg_root()
    axes = _sub(root, 'g', **{'class': 'axes'})
    _line(axes, to_canvas(x_lo, 0.0), to_canvas(x_hi, 0.0))
    _text(axes, to_canvas(x_hi, 0.0), 'x')
    if x_lo <= 0 <= x_hi:
        _line(axes, to_canvas(0.0, 0.0), to_canvas(0.0, r_hi))
        _text(axes, to_canvas(0.0, r_hi), 'r')

    resolved = [_style(styles, k) for k in range(len(curves))]
    for curve, style in zip(curves, resolved):
        points = [to_canvas(x, r) for x, r in curve.nodes]
        d = 'M ' + ' L '.join(f'{_fmt(px)} {_fmt(py)}' for px, py in points)
        if curve.closed:
            d += ' Z'
        path = _sub(root, 'path', d=d, fill='none', stroke=style['color'],
                    stroke_width=_fmt(style['width']))
        if style['dash']:
            path.set('stroke-dasharray', style['dash'])

    _legend(root, resolved)
    return _finish(root, out_path)


def render_series_svg(series: Sequence[Tuple[str, Sequence[float], Sequence[float]]],
                      out_path=None, y_label: str = '') -> bytes:
    """Line plot of (label, t, values) series on shared axes."""
    cleaned = []
    for label, t, values in series:
        t = np.asarray(t, dtype=float)
        values = np.asarray(values, dtype=float)
        keep = np.isfinite(t) & np.isfinite(values)
        cleaned.append((label, t[keep], values[keep]))
    if not any(len(t) for _, t, _ in cleaned):
        raise ValueError('Nothing to plot')

    t_all = np.concatenate([t for _, t, _ in cleaned])
    v_all = np.concatenate([v for _, _, v in cleaned])
    t_lo, t_hi = t_all.min(), t_all.max()
    v_lo, v_hi = min(v_all.min(), 0.0), v_all.max()
    sx = (WIDTH - 2 * MARGIN) / max(t_hi - t_lo, 1e-12)
    sy = (HEIGHT - 2 * MARGIN) / max(v_hi - v_lo, 1e-12)

    def to_canvas(t, v):
        return MARGIN + (t - t_lo) * sx, HEIGHT - MARGIN - (v - v_lo) * sy

    root = _svg_root()
    axes = _sub(root, 'g', **{'class': 'axes'})
    _line(axes, to_canvas(t_lo, v_lo), to_canvas(t_hi, v_lo))
    _line(axes, to_canvas(t_lo, v_lo), to_canvas(t_lo, v_hi))
    _text(axes, to_canvas(t_hi, v_lo), 't')
    _text(axes, to_canvas(t_lo, v_hi), y_label)
    for value in (v_lo, v_hi):
        px, py = to_canvas(t_lo, value)
        _text(axes, (px - 4, py + 4), '%.3g' % value, anchor='end')

    labels = [{'label': label} for label, _, _ in cleaned]
    styles = [_style(labels, k) for k in range(len(cleaned))]
    for (label, t, values), style in zip(cleaned, styles):
        points = ' '.join(f'{_fmt(px)},{_fmt(py)}'
                          for px, py in (to_canvas(a, b) for a, b in zip(t, values)))
        _sub(root, 'polyline', points=points, fill='none', stroke=style['color'],
             stroke_width=_fmt(style['width']))

    _legend(root, styles)
    return _finish(root, out_path)
