import matplotlib.pyplot as plt

from ..utils import display

cm = 1 / 2.54
mplstyledict = {}

_sans = ["Helvetica", "Arial", "DejaVu Sans", "Bitstream Vera Sans", "sans-serif"]

# single-column figures for papers and reports
mplstyledict["print"] = {
    "figure.dpi": 300,
    "figure.facecolor": "white",
    "figure.figsize": (8 * cm, 8 * cm),
    "axes.facecolor": "white",
    "axes.edgecolor": "black",
    "axes.linewidth": 0.8,
    "axes.titlesize": 11,
    "axes.labelsize": 10,
    "axes.spines.right": False,
    "axes.spines.top": False,
    "xtick.major.width": 0.8,
    "ytick.major.width": 0.8,
    "xtick.minor.width": 0.6,
    "ytick.minor.width": 0.6,
    "grid.linewidth": 0.5,
    "grid.alpha": 0.4,
    "grid.linestyle": "--",
    "font.size": 10,
    "font.family": ["sans-serif"],
    "font.sans-serif": _sans,
    "lines.linewidth": 1.2,
    "pdf.fonttype": 42,
    "ps.fonttype": 42,
}

mplstyledict["screen"] = {
    **mplstyledict["print"],
    "figure.dpi": 100,
    "figure.figsize": (20 * cm, 14 * cm),
    "axes.titlesize": 14,
    "axes.labelsize": 12,
    "font.size": 12,
    "lines.linewidth": 1.8,
}


def set_style(styledict: str = "print") -> None:
    if styledict in mplstyledict:
        plt.style.use(mplstyledict[styledict])
        return
    try:
        plt.style.use(styledict)
    except (OSError, KeyError):
        plt.style.use("default")
        display(f"Matplotlib {styledict} style is nonexistent, using default style", color="yellow")
