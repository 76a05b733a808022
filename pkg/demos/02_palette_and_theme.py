"""Dominant cover colors and the derived UI theme.

Every view in the app is themed from the cover in the user's hand; this
shows the extraction for a few covers and renders a swatch sheet SVG.

Run:  python3 demos/02_palette_and_theme.py
"""

from pathlib import Path

from bookvis.features import decode_image
from bookvis.palette import dominant_colors, rgb_to_hex, theme_from_palette
from bookvis.synthcovers import cover_png_bytes

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

rows = []
for seed in (301, 302, 303, 304, 305):
    raster = decode_image(cover_png_bytes(seed))
    palette = dominant_colors(raster, k=4, seed=0)
    theme = theme_from_palette(palette)
    swatches = "  ".join(f"{rgb_to_hex(rgb)} ({mass:.0%})" for rgb, mass in palette.colors)
    print(f"cover {seed}: {swatches}")
    print(f"  theme: primary {rgb_to_hex(theme.primary)}, accent {rgb_to_hex(theme.accent)}, "
          f"background {rgb_to_hex(theme.background)}, "
          f"text {rgb_to_hex(theme.text_on_primary)}")
    rows.append((seed, palette, theme))

# a simple swatch sheet: one row per cover, four mass-scaled blocks + theme strip
parts = ['<?xml version="1.0" encoding="UTF-8"?>',
         '<svg xmlns="http://www.w3.org/2000/svg" width="420" height="%d">' % (len(rows) * 70 + 10)]
for r, (seed, palette, theme) in enumerate(rows):
    y = 10 + r * 70
    x = 10.0
    for rgb, mass in palette.colors:
        w = 280.0 * mass
        parts.append(f'<rect x="{x:.1f}" y="{y}" width="{w:.1f}" height="40" '
                     f'fill="{rgb_to_hex(rgb)}"/>')
        x += w
    for i, slot in enumerate((theme.primary, theme.secondary, theme.accent, theme.background)):
        parts.append(f'<rect x="{300 + i * 26}" y="{y}" width="22" height="40" '
                     f'fill="{rgb_to_hex(slot)}"/>')
    parts.append(f'<text x="10" y="{y + 56}" font-size="11" font-family="sans-serif">'
                 f'cover {seed}: dominant colors | theme slots</text>')
parts.append("</svg>")
(OUT / "palette_sheet.svg").write_text("".join(parts), encoding="utf-8")
print(f"\nwrote {OUT / 'palette_sheet.svg'}")
