"""Command-line interface: `prism <command>`."""

from contextlib import contextmanager
from pathlib import Path
from typing import Optional

import typer
from dotenv import load_dotenv

from .backends import create_backend
from .ddim import DEFAULT_PROMPT
from .errors import ConfigurationError, EmptyInputError, OutputExistsError, PrismError
from .imagecore import channel_stats, load_image, load_mask, save_image
from .logs import configure_logging
from .pipeline import (
    EvalConfig,
    JobConfig,
    build_backend,
    emit_report,
    evaluate_manifest,
    generate_dataset,
    load_job_config,
    load_report,
    run_ablation,
    run_noise_sweep,
    run_noise_type_study,
    save_report,
    write_config_echo,
)
from .metrics.published import SWEEP_SIGMAS
from .pipeline.studies import REPORT_FILE
from .prism import ChromaMode, ChromaSpec, NoiseKind, NoiseSpec, apply_prism, random_style

app = typer.Typer(add_completion=False, help="Training-free mask-to-image augmentation.")

EXIT_ERROR = 1
EXIT_PARTIAL = 2
EXIT_CONFIG = 3


@contextmanager
def _exit_codes():
    try:
        yield
    except (ConfigurationError, EmptyInputError, OutputExistsError) as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(EXIT_CONFIG)
    except PrismError as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(EXIT_ERROR)
    except OSError as exc:
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(EXIT_ERROR)


def _finish(n_failed: int) -> None:
    if n_failed:
        typer.echo(f"{n_failed} sample(s) failed; see the manifest for details", err=True)
        raise typer.Exit(EXIT_PARTIAL)


def _echo(cfg: JobConfig, out_dir: Path, command: str, **extra) -> None:
    write_config_echo({"command": command, "job": cfg.model_dump(mode="json"), **extra}, out_dir)


def _parse_floats(raw: str) -> list[float]:
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise ConfigurationError(f"Expected a comma-separated list of numbers, got '{raw}'") from None


@app.callback()
def main(log_level: Optional[str] = typer.Option(None, "--log-level", help="Overrides PRISM_LOG_LEVEL")):
    load_dotenv()
    configure_logging(log_level)


@app.command()
def apply(
    mask: Path = typer.Option(..., "--mask", help="Binary mask image"),
    style: str = typer.Option("random", "--style", help="Reference image path or 'random'"),
    sigma: float = typer.Option(0.1, "--sigma"),
    chroma: ChromaMode = typer.Option(ChromaMode.PIXEL_SHUFFLE, "--chroma"),
    noise_kind: NoiseKind = typer.Option(NoiseKind.GAUSSIAN, "--noise-kind"),
    noise_mu: Optional[float] = typer.Option(None, "--noise-mu", help="Noise mean; omit to use the style mean"),
    seed: int = typer.Option(0, "--seed"),
    threshold: float = typer.Option(0.5, "--threshold"),
    out: Path = typer.Option(Path("out"), "--out"),
):
    """Render one mask into a Prism input image."""
    with _exit_codes():
        try:
            noise = NoiseSpec(kind=noise_kind, mu=noise_mu, sigma=sigma, seed=seed)
            chroma_spec = ChromaSpec(mode=chroma, seed=seed)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
        binary = load_mask(mask, threshold)
        stats = random_style(seed) if style == "random" else channel_stats(load_image(style))
        image = apply_prism(binary, stats, noise, chroma_spec)
        out.mkdir(parents=True, exist_ok=True)
        target = out / f"{mask.stem}_prism.png"
        save_image(image, target)
        write_config_echo({
            "command": "apply",
            "mask": str(mask),
            "style": style,
            "style_stats": stats.to_dict(),
            "noise": noise.model_dump(mode="json"),
            "chroma": chroma_spec.model_dump(mode="json"),
            "threshold": threshold,
        }, out)
        typer.echo(str(target))


@app.command()
def generate(
    config: Path = typer.Option(..., "--config", help="Job file (TOML or JSON)"),
    force: bool = typer.Option(False, "--force", help="Overwrite an existing run"),
    resume: bool = typer.Option(False, "--resume", help="Skip samples already in the manifest"),
):
    """Generate a dataset from masks."""
    with _exit_codes():
        cfg = load_job_config(config)
        manifest = generate_dataset(cfg, force=force, resume=resume)
        _echo(cfg, cfg.output_dir, "generate", force=force, resume=resume)
        typer.echo(f"{len(manifest.ok())} ok, {len(manifest.failed())} failed -> {manifest.path}")
    _finish(len(manifest.failed()))


@app.command()
def sweep(
    config: Path = typer.Option(..., "--config"),
    sigmas: str = typer.Option(",".join(f"{s:g}" for s in SWEEP_SIGMAS), "--sigmas"),
    force: bool = typer.Option(False, "--force"),
):
    """Noise-amount sweep with per-point metrics."""
    with _exit_codes():
        cfg = load_job_config(config)
        values = _parse_floats(sigmas)
        report = run_noise_sweep(cfg, values, force=force)
        out_dir = cfg.output_dir / "sweep"
        save_report(report, out_dir / REPORT_FILE)
        emit_report(report, out_dir)
        _echo(cfg, out_dir, "sweep", sigmas=values)
        typer.echo(str(out_dir / REPORT_FILE))
    _finish(sum(p.n_failed for p in report.points))


@app.command()
def ablate(
    config: Path = typer.Option(..., "--config"),
    force: bool = typer.Option(False, "--force"),
):
    """Four-arm ablation: none, noise, chroma, noise+chroma."""
    with _exit_codes():
        cfg = load_job_config(config)
        report = run_ablation(cfg, force=force)
        out_dir = cfg.output_dir / "ablation"
        save_report(report, out_dir / REPORT_FILE)
        emit_report(report, out_dir)
        _echo(cfg, out_dir, "ablate")
        typer.echo(str(out_dir / REPORT_FILE))
    _finish(sum(a.n_failed for a in report.arms))


@app.command("noise-study")
def noise_study(
    config: Path = typer.Option(..., "--config"),
    kinds: str = typer.Option("gaussian,salt_pepper,perlin", "--kinds"),
    force: bool = typer.Option(False, "--force"),
):
    """Input and output entropy per noise kind."""
    with _exit_codes():
        cfg = load_job_config(config)
        kind_list = [k.strip() for k in kinds.split(",") if k.strip()]
        report = run_noise_type_study(cfg, kind_list, force=force)
        out_dir = cfg.output_dir / "noise_study"
        save_report(report, out_dir / REPORT_FILE)
        emit_report(report, out_dir)
        _echo(cfg, out_dir, "noise-study", kinds=kind_list)
        typer.echo(str(out_dir / REPORT_FILE))
    _finish(sum(e.n_failed for e in report.entries))


@app.command("eval")
def evaluate(
    manifest: Path = typer.Option(..., "--manifest"),
    reference: Optional[Path] = typer.Option(None, "--reference", help="Reference image set; enables FID"),
    nfid_normalizer: Optional[float] = typer.Option(None, "--nfid-normalizer"),
    config: Optional[Path] = typer.Option(None, "--config", help="Job file supplying backend and eval settings"),
    out: Optional[Path] = typer.Option(None, "--out", help="Defaults to <manifest dir>/eval"),
):
    """Evaluate an existing manifest."""
    with _exit_codes():
        if not manifest.exists():
            raise ConfigurationError(f"Manifest not found: {manifest}")
        cfg = load_job_config(config) if config else None
        eval_cfg = cfg.eval if cfg else EvalConfig()
        updates = {}
        if reference is not None:
            updates.update(fid=True, reference_dir=reference)
        if nfid_normalizer is not None:
            updates["nfid_normalizer"] = nfid_normalizer
        try:
            eval_cfg = EvalConfig.model_validate({**eval_cfg.model_dump(), **updates})
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc

        backend = build_backend(cfg.backend) if cfg else create_backend("toy")
        prompt = cfg.diffusion.prompt if cfg else DEFAULT_PROMPT
        try:
            report = evaluate_manifest(manifest, backend, eval_cfg, prompt=prompt, seed=cfg.seed if cfg else 0)
        finally:
            backend.close()

        out_dir = out or manifest.parent / "eval"
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "metrics.json").write_text(report.model_dump_json(indent=2) + "\n")
        write_config_echo({
            "command": "eval",
            "manifest": str(manifest),
            "eval": eval_cfg.model_dump(mode="json"),
            "backend": cfg.backend.model_dump(mode="json") if cfg else {"kind": "toy"},
        }, out_dir)
        typer.echo(str(out_dir / "metrics.json"))


@app.command()
def report(
    in_path: Path = typer.Option(..., "--in", help="report.json from sweep, ablate or noise-study"),
    out: Path = typer.Option(..., "--out"),
):
    """Re-render CSV and plots from a saved report."""
    with _exit_codes():
        loaded = load_report(in_path)
        paths = emit_report(loaded, out)
        write_config_echo({"command": "report", "in": str(in_path), "kind": loaded.kind}, out)
        for path in paths:
            typer.echo(str(path))


if __name__ == "__main__":
    app()
