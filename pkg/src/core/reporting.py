"""
Console reporting helpers.
Status lines keep the banner-and-symbol look of the launcher scripts;
diagnostics go through the standard logging tree.
"""
import logging
import sys

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
RULE_WIDTH = 60


def setup_logging(verbose=False):
    """Configure the root logger once for command line use."""
    level = logging.DEBUG if verbose else logging.INFO
    root = logging.getLogger()
    if not any(getattr(h, "_triplet_layout", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._triplet_layout = True
        root.addHandler(handler)
    root.setLevel(level)


def print_banner(title):
    print("=" * RULE_WIDTH)
    print(title)
    print("=" * RULE_WIDTH)


def print_status(symbol, message):
    print(f"{symbol} {message}")


def print_table(rows, columns):
    """Print a list of dict rows as fixed-width columns."""
    widths = {c: max(len(c), *(len(_fmt(r.get(c))) for r in rows)) if rows else len(c) for c in columns}
    print(" | ".join(c.ljust(widths[c]) for c in columns))
    print("-" * (sum(widths.values()) + 3 * (len(columns) - 1)))
    for row in rows:
        print(" | ".join(_fmt(row.get(c)).ljust(widths[c]) for c in columns))


def _fmt(value):
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)
