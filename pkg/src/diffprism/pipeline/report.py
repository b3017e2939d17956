"""CSV tables and static plots for study reports."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from ..errors import EmptyInputError  # noqa: E402
from ..logs import get_logger  # noqa: E402
from ..metrics.published import ABLATION, BENCHMARK, PublishedRow  # noqa: E402

logger = get_logger(__name__)

_COUNT_COLUMNS = {"n_samples", "n_failed"}

# (x, y) metric pairs of the trade-off panels
TRADEOFF_PANELS = (("nfid", "ssim"), ("clip_score", "ssim"), ("nfid", "clip_score"))
_LABELS = {"nfid": "nFID", "fid": "FID", "ssim": "SSIM", "clip_score": "CLIP score"}


def report_frame(report) -> pd.DataFrame:
    rows = report.rows()
    if not rows:
        raise EmptyInputError(f"Report of kind {report.kind} has no rows")
    return pd.DataFrame(rows)


def _metric_columns(df: pd.DataFrame, axis: str) -> list[str]:
    return [
        c for c in df.columns
        if c != axis and c not in _COUNT_COLUMNS and not c.endswith("_n") and df[c].notna().any()
        and pd.api.types.is_numeric_dtype(df[c])
    ]


def _plot_metrics(df: pd.DataFrame, axis: str, path: Path) -> Path:
    columns = _metric_columns(df, axis)
    fig, axes = plt.subplots(1, max(len(columns), 1), figsize=(4 * max(len(columns), 1), 3.5), squeeze=False)
    numeric_axis = pd.api.types.is_numeric_dtype(df[axis])
    for ax, column in zip(axes[0], columns):
        if numeric_axis:
            ax.plot(df[axis], df[column], marker="o")
            ax.set_xscale("symlog", linthresh=0.01)
        else:
            ax.bar(df[axis].astype(str), df[column])
            ax.tick_params(axis="x", rotation=30)
        ax.set_xlabel(axis)
        ax.set_ylabel(_LABELS.get(column, column))
    if not columns:
        axes[0][0].text(0.5, 0.5, "no metrics", ha="center", va="center")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _plot_tradeoffs(df: pd.DataFrame, axis: str, path: Path, published: dict[str, PublishedRow]) -> Path:
    fig, axes = plt.subplots(1, len(TRADEOFF_PANELS), figsize=(15, 4.5))
    for ax, (x, y) in zip(axes, TRADEOFF_PANELS):
        ax.set_xlabel(_LABELS[x])
        ax.set_ylabel(_LABELS[y])
        have = x in df.columns and y in df.columns and df[[x, y]].notna().all(axis=1).any()
        if have:
            sub = df[df[[x, y]].notna().all(axis=1)]
            ax.scatter(sub[x], sub[y], label="this run")
            for _, row in sub.iterrows():
                ax.annotate(str(row[axis]), (row[x], row[y]), fontsize=7)
        else:
            ax.text(0.5, 0.5, "no data", ha="center", va="center", transform=ax.transAxes)
        published_x = [getattr(r, x) for r in published.values()]
        published_y = [getattr(r, y) for r in published.values()]
        ax.scatter(published_x, published_y, marker="x", color="grey", label="published")
        for name, row in published.items():
            ax.annotate(name, (getattr(row, x), getattr(row, y)), fontsize=6, color="grey")
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def emit_report(report, out_dir: str | Path) -> list[Path]:
    """Write <kind>.csv plus metric curves and, for sweeps and ablations, the trade-off panels."""
    out_dir = Path(out_dir)
    df = report_frame(report)
    out_dir.mkdir(parents=True, exist_ok=True)

    csv_path = out_dir / f"{report.kind}.csv"
    df.to_csv(csv_path, index=False, float_format="%.10g", lineterminator="\n")
    paths = [csv_path, _plot_metrics(df, report.axis, out_dir / f"{report.kind}_metrics.png")]
    if report.kind != "noise_study":
        published = ABLATION if report.kind == "ablation" else BENCHMARK
        paths.append(_plot_tradeoffs(df, report.axis, out_dir / f"{report.kind}_tradeoffs.png", published))

    logger.info("report kind=%s rows=%d out=%s", report.kind, len(df), out_dir)
    return paths
