"""
Category Color Palettes for layout rendering.
Maps object categories to RGB colours, with named looks for known
categories and evenly spread hues for everything else.
"""
import colorsys

GOLDEN_RATIO = 0.618033988749895


class ColorPalette:
    """Base palette: background colour plus per-category colours."""

    def __init__(self):
        self.background = (30, 30, 60)
        self.named_colors = {
            'sky': (135, 206, 235),
            'cloud': (235, 235, 245),
            'tree': (34, 139, 34),
            'building': (150, 110, 90),
            'wall': (200, 190, 170),
            'person': (255, 120, 60),
            'car': (200, 40, 60),
            'grass': (110, 200, 90),
            'road': (90, 90, 100),
            'pavement': (170, 170, 160),
        }
        self.saturation = 0.65
        self.value = 0.9

    def category_color(self, index, name=None):
        """Colour for a category; named colours win over generated hues."""
        if name is not None and name in self.named_colors:
            return self.named_colors[name]
        hue = (index * GOLDEN_RATIO) % 1.0
        r, g, b = colorsys.hsv_to_rgb(hue, self.saturation, self.value)
        return (int(r * 255), int(g * 255), int(b * 255))

    def lookup_table(self, category_names):
        """List of RGB tuples indexed by category, background appended last."""
        colors = [self.category_color(i, name) for i, name in enumerate(category_names)]
        return colors + [self.background]

    def _blend_colors(self, color1, color2, factor):
        """Blend two colors with given factor (0=color1, 1=color2)."""
        factor = max(0, min(1, factor))
        return tuple(int(a + (b - a) * factor) for a, b in zip(color1, color2))


class NaturalisticPalette(ColorPalette):
    """Scene-like colours: dark ground background, natural category tones."""

    def __init__(self):
        super().__init__()
        self.background = (15, 15, 35)


class VibrantPalette(ColorPalette):
    """Saturated colours, named categories pushed towards full saturation."""

    def __init__(self):
        super().__init__()
        self.background = (25, 25, 80)
        self.saturation = 0.95
        self.value = 1.0
        self.named_colors = {
            name: self._blend_colors(color, _saturate(color), 0.6)
            for name, color in self.named_colors.items()
        }


class MonochromePalette(ColorPalette):
    """Grey levels only."""

    def __init__(self):
        super().__init__()
        self.background = (20, 20, 20)
        self.named_colors = {}
        self.saturation = 0.0

    def category_color(self, index, name=None):
        level = 60 + (index * 37) % 180
        return (level, level, level)


def _saturate(color):
    h, s, v = colorsys.rgb_to_hsv(*(c / 255 for c in color))
    r, g, b = colorsys.hsv_to_rgb(h, 1.0, max(v, 0.8))
    return (int(r * 255), int(g * 255), int(b * 255))


def create_palette(palette_type="naturalistic"):
    """Factory function to create color palettes."""
    palettes = {
        "naturalistic": NaturalisticPalette,
        "vibrant": VibrantPalette,
        "monochrome": MonochromePalette,
        "classic": ColorPalette,
    }

    if palette_type not in palettes:
        palette_type = "naturalistic"

    return palettes[palette_type]()
