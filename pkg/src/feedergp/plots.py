"""Matplotlib renderers for benchmark outputs (file targets only)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (9.0, 5.0),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 10,
}

MODEL_COLORS = {
    "TRUTH": "#222222",
    "GP": "#1f77b4",
    "DNN": "#d62728",
    "LDF": "#2ca02c",
}

PHASE_COLORS = {"a": "#1f77b4", "b": "#d62728", "c": "#2ca02c"}


def voltage_profile_figure(depths, series, hour, path):
    """Voltage magnitude against feeder depth, one trace per model."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for name, values in series.items():
            ax.plot(
                depths,
                values,
                ".",
                ms=4 if name != "TRUTH" else 6,
                color=MODEL_COLORS.get(name, "#777777"),
                label=name.lower() if name != "TRUTH" else "nonlinear solution",
                alpha=0.8,
            )
        ax.set_xlabel("hops from substation")
        ax.set_ylabel("voltage magnitude [p.u.]")
        ax.set_title(f"nodal voltage profile, hour {hour}")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def per_bus_mae_figure(depths, phases, mae, model, path):
    """Per-node MAE against depth, colored by phase."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for ph in "abc":
            sel = [i for i, p in enumerate(phases) if p == ph]
            if sel:
                ax.plot(
                    [depths[i] for i in sel],
                    [mae[i] for i in sel],
                    ".",
                    ms=5,
                    color=PHASE_COLORS[ph],
                    label=f"phase {ph}",
                )
        ax.set_xlabel("hops from substation")
        ax.set_ylabel("mean absolute error [p.u.]")
        ax.set_title(f"{model.lower()} per-node error profile")
        ax.set_yscale("log")
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def time_series_figure(hours, truth_by_phase, pred_by_phase, model, bus, path):
    """Hourly voltage traces at one bus, truth vs prediction per phase."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for ph, truth in truth_by_phase.items():
            ax.plot(hours, truth, "-", color=PHASE_COLORS[ph], lw=1.2, label=f"phase {ph} truth")
            if ph in pred_by_phase:
                ax.plot(
                    hours,
                    pred_by_phase[ph],
                    "--",
                    color=PHASE_COLORS[ph],
                    lw=1.0,
                    label=f"phase {ph} {model.lower()}",
                )
        ax.set_xlabel("hour")
        ax.set_ylabel("voltage magnitude [p.u.]")
        ax.set_title(f"bus {bus}: hourly voltage, truth vs {model.lower()}")
        ax.legend(frameon=False, ncol=3, fontsize=8)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
