"""Config loading, figure reproduction and sweeps."""
from .config import ExperimentSpec, load_config
from .runner import run_fig2, run_fig3, run_fig4_fig5, sweep

__all__ = ["ExperimentSpec", "load_config", "run_fig2", "run_fig3", "run_fig4_fig5", "sweep"]
