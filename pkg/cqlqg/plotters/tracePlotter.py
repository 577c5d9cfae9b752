import numpy as np
import polars as pl
import matplotlib.pyplot as plt

from ..core.exceptions import PreconditionError
from .plotter_utils import set_style


class TracePlotter:
    """Relative deviation E(u_k)/E_min - 1 of one or more descent traces on a log scale"""

    def __init__(self, traces: pl.DataFrame | list[pl.DataFrame], e_min: float, **kwargs) -> None:
        if isinstance(traces, pl.DataFrame):
            traces = [traces]
        for t in traces:
            if "cost" not in t.columns or "k" not in t.columns:
                raise PreconditionError("Trace needs k and cost columns")
        if e_min <= 0:
            raise PreconditionError(f"e_min must be positive, got {e_min}")
        self.traces = traces
        self.e_min = e_min
        self.fig = None
        set_style(kwargs.pop("style", "print"))

    def relative_deviation(self, trace: pl.DataFrame) -> tuple[np.ndarray, np.ndarray]:
        k = trace["k"].to_numpy()
        dev = trace["cost"].to_numpy() / self.e_min - 1
        keep = dev > 0
        return k[keep], dev[keep]

    def plot(self, ax: plt.Axes = None, labels: list[str] = None) -> plt.Axes:
        if ax is None:
            self.fig = plt.figure()
            ax = self.fig.add_subplot(1, 1, 1)
        else:
            self.fig = ax.figure

        if labels is None:
            labels = [f"run {i}" for i in range(len(self.traces))]
        for trace, label in zip(self.traces, labels):
            k, dev = self.relative_deviation(trace)
            ax.semilogy(k, dev, label=label)

        ax.set_xlabel("step k")
        ax.set_ylabel(r"$\mathcal{E}(u_k)/\mathcal{E}_{\min} - 1$")
        ax.grid(True, which="major")
        if len(self.traces) > 1:
            ax.legend(frameon=False, fontsize="small")
        return ax

    def save(self, path: str) -> str:
        if self.fig is None:
            self.plot()
        self.fig.savefig(path, bbox_inches="tight")
        plt.close(self.fig)
        return path
